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

#include "specnorm/oracle.hpp"

#include <Eigen/SVD>

namespace specnorm::oracle {

namespace {

bool advance(Extents &index, const Extents &shape) {
    for (std::size_t a = shape.size(); a-- > 0;) {
        if (++index[a] < shape[a])
            return true;
        index[a] = 0;
    }
    return false;
}

void check_filter_fits(const Tensor &filter, const Extents &spatial) {
    if (filter.shape.size() != spatial.size())
        throw Error(ErrorCode::shape_mismatch,
                    "filter and data dimensionality differ");
    for (std::size_t a = 0; a < spatial.size(); ++a) {
        if (filter.shape[a] % 2 == 0)
            throw Error(ErrorCode::even_kernel_extent,
                        "kernel extents must be odd (2p+1)");
        if (filter.shape[a] > spatial[a])
            throw Error(ErrorCode::target_too_small,
                        "filter exceeds the data extents");
    }
}

} // namespace

Tensor circulant_cross_correlate(const Tensor &filter, const Tensor &x) {
    check_filter_fits(filter, x.shape);
    const std::size_t d = x.shape.size();
    const Extents xstr = row_major_strides(x.shape);
    const Extents fstr = row_major_strides(filter.shape);

    Tensor y = Tensor::zeros(x.shape);
    Extents n(d, 0);
    std::int64_t yi = 0;
    do {
        double acc = 0.0;
        Extents j(d, 0);
        do {
            std::int64_t xi = 0;
            std::int64_t fi = 0;
            for (std::size_t a = 0; a < d; ++a) {
                const std::int64_t p = (filter.shape[a] - 1) / 2;
                std::int64_t pos = (n[a] + j[a] - p) % x.shape[a];
                if (pos < 0)
                    pos += x.shape[a];
                xi += pos * xstr[a];
                fi += j[a] * fstr[a];
            }
            acc += filter[fi] * x[xi];
        } while (advance(j, filter.shape));
        y[yi++] = acc;
    } while (advance(n, x.shape));
    return y;
}

Tensor zero_padded_correlate(const Tensor &filter, const Tensor &x,
                             const Extents &stride) {
    check_filter_fits(filter, x.shape);
    const std::size_t d = x.shape.size();
    if (stride.size() != d)
        throw Error(ErrorCode::shape_mismatch, "stride rank mismatch");
    for (std::size_t a = 0; a < d; ++a)
        if (stride[a] < 1)
            throw Error(ErrorCode::shape_mismatch, "stride extents must be positive");

    Extents out_shape(d);
    for (std::size_t a = 0; a < d; ++a)
        out_shape[a] = (x.shape[a] + stride[a] - 1) / stride[a];
    const Extents xstr = row_major_strides(x.shape);
    const Extents fstr = row_major_strides(filter.shape);

    Tensor y = Tensor::zeros(out_shape);
    Extents m(d, 0);
    std::int64_t yi = 0;
    do {
        double acc = 0.0;
        Extents j(d, 0);
        do {
            std::int64_t xi = 0;
            std::int64_t fi = 0;
            bool inside = true;
            for (std::size_t a = 0; a < d; ++a) {
                const std::int64_t p = (filter.shape[a] - 1) / 2;
                const std::int64_t pos = m[a] * stride[a] + j[a] - p;
                if (pos < 0 || pos >= x.shape[a]) {
                    inside = false;
                    break;
                }
                xi += pos * xstr[a];
                fi += j[a] * fstr[a];
            }
            if (inside)
                acc += filter[fi] * x[xi];
        } while (advance(j, filter.shape));
        y[yi++] = acc;
    } while (advance(m, out_shape));
    return y;
}

Tensor flip_all_axes(const Tensor &filter) {
    const std::size_t d = filter.shape.size();
    const Extents fstr = row_major_strides(filter.shape);
    Tensor out = Tensor::zeros(filter.shape);
    Extents j(d, 0);
    std::int64_t src = 0;
    do {
        std::int64_t dst = 0;
        for (std::size_t a = 0; a < d; ++a)
            dst += (filter.shape[a] - 1 - j[a]) * fstr[a];
        out[dst] = filter[src++];
    } while (advance(j, filter.shape));
    return out;
}

DenseOperator materialize_circulant(const Tensor &filter, const Extents &spatial) {
    check_filter_fits(filter, spatial);
    const std::int64_t n = numel(spatial);
    DenseOperator op;
    op.description = "circulant";
    op.matrix.resize(n, n);
    Tensor basis = Tensor::zeros(spatial);
    for (std::int64_t k = 0; k < n; ++k) {
        basis[k] = 1.0;
        const Tensor column = circulant_cross_correlate(filter, basis);
        for (std::int64_t r = 0; r < n; ++r)
            op.matrix(r, k) = column[r];
        basis[k] = 0.0;
    }
    return op;
}

DenseOperator materialize_zero_padded(const Tensor &filter,
                                      const FeatureGeometry &geometry) {
    validate_geometry(geometry);
    if (geometry.padding_mode != PaddingMode::zero)
        throw Error(ErrorCode::shape_mismatch,
                    "zero-padded materialization requires zero mode");
    check_filter_fits(filter, geometry.spatial);
    for (std::size_t a = 0; a < geometry.pad.size(); ++a)
        if (geometry.pad[a] != (filter.shape[a] - 1) / 2)
            throw Error(ErrorCode::shape_mismatch,
                        "geometry pad must match the filter half-widths");

    const std::int64_t cols = numel(geometry.spatial);
    Extents out_shape(geometry.spatial.size());
    for (std::size_t a = 0; a < out_shape.size(); ++a)
        out_shape[a] = (geometry.spatial[a] + geometry.stride[a] - 1) /
                       geometry.stride[a];
    const std::int64_t rows = numel(out_shape);

    DenseOperator op;
    op.description = geometry.unit_stride() ? "zero-padded" : "strided";
    op.matrix.resize(rows, cols);
    Tensor basis = Tensor::zeros(geometry.spatial);
    for (std::int64_t k = 0; k < cols; ++k) {
        basis[k] = 1.0;
        const Tensor column = zero_padded_correlate(filter, basis, geometry.stride);
        for (std::int64_t r = 0; r < rows; ++r)
            op.matrix(r, k) = column[r];
        basis[k] = 0.0;
    }
    return op;
}

DenseOperator materialize_pointwise(const ConnectivityMatrix &theta,
                                    const Extents &spatial) {
    const std::int64_t pixels = numel(spatial);
    const std::int64_t rows = theta.rows() * pixels;
    const std::int64_t cols = theta.cols() * pixels;
    DenseOperator op;
    op.description = "pointwise-block";
    op.matrix = Eigen::MatrixXd::Zero(rows, cols);
    for (std::int64_t i = 0; i < theta.rows(); ++i)
        for (std::int64_t j = 0; j < theta.cols(); ++j)
            for (std::int64_t q = 0; q < pixels; ++q)
                op.matrix(i * pixels + q, j * pixels + q) = theta.at(i, j);
    return op;
}

NormEstimate exact_norm_svd(const DenseOperator &op) {
    if (op.matrix.rows() < 1 || op.matrix.cols() < 1)
        throw Error(ErrorCode::shape_mismatch, "operator must be non-empty");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(op.matrix);
    if (svd.info() != Eigen::Success)
        throw Error(ErrorCode::numerical_failure, "SVD did not converge");
    NormEstimate estimate;
    estimate.value = svd.singularValues()(0);
    estimate.method = NormMethod::svd_oracle;
    estimate.iterations = 0;
    estimate.residual = 0.0;
    estimate.is_upper_bound = false;
    return estimate;
}

} // namespace specnorm::oracle
