/*
 * Copyright 2026 The specnorm authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SPECNORM_ORACLE_HPP
#define SPECNORM_ORACLE_HPP

#include <string>

#include <Eigen/Dense>

#include "specnorm/model.hpp"
#include "specnorm/types.hpp"

/* Brute-force ground truth. Everything in here is deliberately naive:
 * operators are materialized column by column from basis tensors and
 * norms come from dense SVD. Trusted, not fast. */
namespace specnorm::oracle {

struct DenseOperator {
    Eigen::MatrixXd matrix;
    std::string description;
};

/* Cross-correlation with circular continuation, centered taps:
 * y[n] = sum_j theta[j] x[(n + j - p) mod N]. A centered delta filter is
 * the identity. */
Tensor circulant_cross_correlate(const Tensor &filter, const Tensor &x);

/* Same-size zero-padded cross-correlation followed by subsampling that
 * keeps output indices congruent 0 mod stride. Output extents are
 * ceil(N_i / stride_i). */
Tensor zero_padded_correlate(const Tensor &filter, const Tensor &x,
                             const Extents &stride);

/* Filter reversed along every axis; correlating with it is the adjoint
 * of correlating with the original under circular continuation. */
Tensor flip_all_axes(const Tensor &filter);

DenseOperator materialize_circulant(const Tensor &filter, const Extents &spatial);

/* Geometry must be zero mode with pad equal to the filter's half-widths;
 * geometry.stride selects the subsampling. */
DenseOperator materialize_zero_padded(const Tensor &filter,
                                      const FeatureGeometry &geometry);

/* Block-diagonal per-pixel mixing operator in channel-major vectorization:
 * entry ((i, q), (j, q)) = theta(i, j) for every pixel q. */
DenseOperator materialize_pointwise(const ConnectivityMatrix &theta,
                                    const Extents &spatial);

/* Largest singular value by dense SVD. Intended for sides up to ~4096. */
NormEstimate exact_norm_svd(const DenseOperator &op);

} // namespace specnorm::oracle

#endif
