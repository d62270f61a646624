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

#ifndef SPECNORM_TYPES_HPP
#define SPECNORM_TYPES_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace specnorm {

using Extents = std::vector<std::int64_t>;

std::int64_t numel(const Extents &shape);
Extents row_major_strides(const Extents &shape);

enum class ErrorCode : int {
    even_kernel_extent = 1,
    shape_mismatch,
    non_finite_entry,
    target_too_small,
    non_convergence,
    zero_vector,
    numerical_failure,
    zero_norm_kernel,
    bundle_parse_error,
    usage_error,
    io_error,
};

const char *to_string(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string &message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    /* Exit-code category: 3 for malformed data, 4 for numerical failure. */
    int exit_category() const noexcept;

  private:
    ErrorCode code_;
};

struct Tensor {
    Extents shape;
    std::vector<double> values;

    Tensor() = default;
    Tensor(Extents s, std::vector<double> v);

    static Tensor zeros(const Extents &shape);

    std::int64_t size() const noexcept {
        return static_cast<std::int64_t>(values.size());
    }
    int dims() const noexcept { return static_cast<int>(shape.size()); }

    double &operator[](std::int64_t i) { return values[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return values[static_cast<std::size_t>(i)]; }
};

enum class PaddingMode { circulant, zero };

struct FeatureGeometry {
    Extents spatial;
    Extents pad;
    Extents stride;
    PaddingMode padding_mode = PaddingMode::zero;

    int dims() const noexcept { return static_cast<int>(spatial.size()); }
    bool unit_stride() const noexcept;
};

/* Throws shape_mismatch unless spatial/pad/stride agree in rank with d in
 * {1,2,3}, extents are positive, pads non-negative, and stride_i <= N_i. */
void validate_geometry(const FeatureGeometry &geometry);

enum class NormMethod {
    exact_circulant_dft,
    dft_upper_bound,
    power_method,
    svd_oracle,
};

const char *to_string(NormMethod method);

struct NormEstimate {
    double value = 0.0;
    NormMethod method = NormMethod::svd_oracle;
    std::int64_t iterations = 0;
    double residual = 0.0;
    bool is_upper_bound = false;
};

enum class ScalingKind { hard, soft };

struct ScalingPolicy {
    ScalingKind kind = ScalingKind::hard;
    double K = 1.0;
    double s = 0.0;
};

} // namespace specnorm

#endif
