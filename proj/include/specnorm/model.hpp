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

#ifndef SPECNORM_MODEL_HPP
#define SPECNORM_MODEL_HPP

#include <cstdint>
#include <vector>

#include "specnorm/types.hpp"

namespace specnorm {

/* Per-channel filters of a depthwise convolution layer. All channels share
 * one odd kernel shape (2p_i + 1 per axis); immutable once validated. */
class FilterBank {
  public:
    /* Validates and adopts the raw filters. Throws even_kernel_extent,
     * shape_mismatch or non_finite_entry; never returns a partial bank. */
    static FilterBank validate(std::vector<Tensor> raw);

    std::int64_t channels() const noexcept {
        return static_cast<std::int64_t>(filters_.size());
    }
    int dims() const noexcept { return filters_.front().dims(); }
    const Extents &kernel_shape() const noexcept { return filters_.front().shape; }
    /* Half-widths p_i with kernel extent 2p_i + 1. */
    Extents pad() const;

    const Tensor &filter(std::int64_t channel) const {
        return filters_[static_cast<std::size_t>(channel)];
    }
    const std::vector<Tensor> &filters() const noexcept { return filters_; }

    /* Entrywise scaling, used by normalization. */
    FilterBank scaled(double factor) const;

  private:
    explicit FilterBank(std::vector<Tensor> filters) : filters_(std::move(filters)) {}
    std::vector<Tensor> filters_;
};

FilterBank validate_filter_bank(std::vector<Tensor> raw);

/* Bank of `count` filters with independent standard-normal entries drawn
 * from stream (seed, 0). Same seed, same bank, bit for bit. */
FilterBank random_gaussian_filters(std::int64_t count, const Extents &shape,
                                   std::uint64_t seed);

/* Plain row-major real matrix. */
struct DenseMatrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<double> values;

    static DenseMatrix zeros(std::int64_t rows, std::int64_t cols);

    double &at(std::int64_t r, std::int64_t c) {
        return values[static_cast<std::size_t>(r * cols + c)];
    }
    double at(std::int64_t r, std::int64_t c) const {
        return values[static_cast<std::size_t>(r * cols + c)];
    }
};

/* The C_out x C_in tap matrix of a pointwise convolution. Its spectral
 * norm equals the norm of the full per-pixel mixing operator. */
class ConnectivityMatrix {
  public:
    /* Throws shape_mismatch or non_finite_entry. */
    static ConnectivityMatrix validate(DenseMatrix entries);

    std::int64_t rows() const noexcept { return entries_.rows; }
    std::int64_t cols() const noexcept { return entries_.cols; }
    double at(std::int64_t r, std::int64_t c) const { return entries_.at(r, c); }
    const DenseMatrix &entries() const noexcept { return entries_; }

    ConnectivityMatrix scaled(double factor) const;

  private:
    explicit ConnectivityMatrix(DenseMatrix entries) : entries_(std::move(entries)) {}
    DenseMatrix entries_;
};

ConnectivityMatrix random_gaussian_matrix(std::int64_t rows, std::int64_t cols,
                                          std::uint64_t seed);

} // namespace specnorm

#endif
