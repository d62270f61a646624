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

#include "specnorm/model.hpp"

#include <cmath>

#include "specnorm/rng.hpp"

namespace specnorm {

FilterBank FilterBank::validate(std::vector<Tensor> raw) {
    if (raw.empty())
        throw Error(ErrorCode::shape_mismatch, "filter bank must not be empty");
    const Extents &shape = raw.front().shape;
    const std::size_t d = shape.size();
    if (d < 1 || d > 3)
        throw Error(ErrorCode::shape_mismatch,
                    "filter dimensionality must be 1, 2 or 3");
    for (std::int64_t extent : shape)
        if (extent < 1 || extent % 2 == 0)
            throw Error(ErrorCode::even_kernel_extent,
                        "kernel extents must be odd (2p+1)");
    for (const Tensor &filter : raw) {
        if (filter.shape != shape)
            throw Error(ErrorCode::shape_mismatch,
                        "all filters in a bank must share one shape");
        for (double v : filter.values)
            if (!std::isfinite(v))
                throw Error(ErrorCode::non_finite_entry,
                            "filter entries must be finite");
    }
    return FilterBank(std::move(raw));
}

Extents FilterBank::pad() const {
    Extents p(kernel_shape().size());
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = (kernel_shape()[i] - 1) / 2;
    return p;
}

FilterBank FilterBank::scaled(double factor) const {
    std::vector<Tensor> out = filters_;
    for (Tensor &filter : out)
        for (double &v : filter.values)
            v *= factor;
    return FilterBank(std::move(out));
}

FilterBank validate_filter_bank(std::vector<Tensor> raw) {
    return FilterBank::validate(std::move(raw));
}

FilterBank random_gaussian_filters(std::int64_t count, const Extents &shape,
                                   std::uint64_t seed) {
    if (count < 1)
        throw Error(ErrorCode::shape_mismatch, "filter count must be positive");
    for (std::int64_t extent : shape)
        if (extent < 1 || extent % 2 == 0)
            throw Error(ErrorCode::even_kernel_extent,
                        "kernel extents must be odd (2p+1)");
    rng::PhiloxStream stream(seed, 0);
    std::vector<Tensor> filters;
    filters.reserve(static_cast<std::size_t>(count));
    const std::int64_t n = numel(shape);
    for (std::int64_t c = 0; c < count; ++c) {
        Tensor filter = Tensor::zeros(shape);
        for (std::int64_t i = 0; i < n; ++i)
            filter[i] = stream.next_gaussian();
        filters.push_back(std::move(filter));
    }
    return FilterBank::validate(std::move(filters));
}

DenseMatrix DenseMatrix::zeros(std::int64_t rows, std::int64_t cols) {
    DenseMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.values.assign(static_cast<std::size_t>(rows * cols), 0.0);
    return m;
}

ConnectivityMatrix ConnectivityMatrix::validate(DenseMatrix entries) {
    if (entries.rows < 1 || entries.cols < 1)
        throw Error(ErrorCode::shape_mismatch,
                    "connectivity matrix must have positive shape");
    if (static_cast<std::int64_t>(entries.values.size()) !=
        entries.rows * entries.cols)
        throw Error(ErrorCode::shape_mismatch,
                    "connectivity value count does not match its shape");
    for (double v : entries.values)
        if (!std::isfinite(v))
            throw Error(ErrorCode::non_finite_entry,
                        "connectivity entries must be finite");
    return ConnectivityMatrix(std::move(entries));
}

ConnectivityMatrix ConnectivityMatrix::scaled(double factor) const {
    DenseMatrix out = entries_;
    for (double &v : out.values)
        v *= factor;
    return ConnectivityMatrix(std::move(out));
}

ConnectivityMatrix random_gaussian_matrix(std::int64_t rows, std::int64_t cols,
                                          std::uint64_t seed) {
    DenseMatrix m = DenseMatrix::zeros(rows, cols);
    rng::PhiloxStream stream(seed, 0);
    for (double &v : m.values)
        v = stream.next_gaussian();
    return ConnectivityMatrix::validate(std::move(m));
}

} // namespace specnorm
