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

#ifndef SPECNORM_DFT_HPP
#define SPECNORM_DFT_HPP

#include <complex>
#include <cstdint>

#include "specnorm/model.hpp"
#include "specnorm/types.hpp"

namespace specnorm::dft {

/* Per-frequency magnitudes |DFT(pad(filter))| on the full target grid. */
struct PaddedSpectrum {
    Tensor magnitudes;
    std::int64_t source_channel = 0;
};

/* Copies the filter into the corner of a zero tensor of the target shape.
 * Only magnitudes of the transform are consumed downstream, and those are
 * invariant under circular placement shifts. */
Tensor zero_pad_filter(const Tensor &filter, const Extents &target);

/* Unnormalized forward transform of a real tensor. */
std::vector<std::complex<double>> forward_dft(const Tensor &input);

/* Magnitudes of the unnormalized forward transform, same shape as input. */
Tensor dft_magnitudes(const Tensor &input);

PaddedSpectrum padded_spectrum(const Tensor &filter, const Extents &target,
                               std::int64_t source_channel = 0);

/* Largest transform magnitude of the corner-padded filter; cheaper than
 * materializing the mirrored full grid. */
double max_dft_magnitude(const Tensor &filter, const Extents &target);

/* Exact norm of the circulant convolution operator with this filter on
 * the geometry's grid. Geometry must be circulant mode with unit stride. */
NormEstimate circulant_spectral_norm(const Tensor &filter,
                                     const FeatureGeometry &geometry);

/* Guaranteed upper bound for the zero-padded depthwise operator: max over
 * channels and frequencies of |DFT| at the padded-image shape N + 2p.
 * Geometry must be zero mode with pad equal to the bank's half-widths and
 * unit stride. */
NormEstimate depthwise_spectral_bound(const FilterBank &bank,
                                      const FeatureGeometry &geometry);

/* heuristic=false passes the bound through unchanged (subsampling never
 * increases the norm). heuristic=true divides by prod(sqrt(stride_i));
 * the result is an estimate, not a bound, and is flagged accordingly. */
NormEstimate stride_adjusted_estimate(const NormEstimate &bound,
                                      const Extents &stride, bool heuristic);

} // namespace specnorm::dft

#endif
