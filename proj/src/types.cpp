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

#include "specnorm/types.hpp"

namespace specnorm {

std::int64_t numel(const Extents &shape) {
    std::int64_t n = 1;
    for (std::int64_t e : shape)
        n *= e;
    return n;
}

Extents row_major_strides(const Extents &shape) {
    Extents strides(shape.size(), 1);
    for (std::size_t i = shape.size(); i-- > 1;)
        strides[i - 1] = strides[i] * shape[i];
    return strides;
}

const char *to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::even_kernel_extent: return "EvenKernelExtent";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::non_finite_entry: return "NonFiniteEntry";
    case ErrorCode::target_too_small: return "TargetTooSmall";
    case ErrorCode::non_convergence: return "NonConvergence";
    case ErrorCode::zero_vector: return "ZeroVector";
    case ErrorCode::numerical_failure: return "NumericalFailure";
    case ErrorCode::zero_norm_kernel: return "ZeroNormKernel";
    case ErrorCode::bundle_parse_error: return "BundleParseError";
    case ErrorCode::usage_error: return "UsageError";
    case ErrorCode::io_error: return "IoError";
    }
    return "UnknownError";
}

int Error::exit_category() const noexcept {
    switch (code_) {
    case ErrorCode::non_convergence:
    case ErrorCode::zero_vector:
    case ErrorCode::numerical_failure:
    case ErrorCode::zero_norm_kernel:
        return 4;
    case ErrorCode::usage_error:
        return 2;
    default:
        return 3;
    }
}

Tensor::Tensor(Extents s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {
    if (numel(shape) != static_cast<std::int64_t>(values.size()))
        throw Error(ErrorCode::shape_mismatch,
                    "tensor value count does not match its shape");
}

Tensor Tensor::zeros(const Extents &shape) {
    Tensor t;
    t.shape = shape;
    t.values.assign(static_cast<std::size_t>(numel(shape)), 0.0);
    return t;
}

bool FeatureGeometry::unit_stride() const noexcept {
    for (std::int64_t s : stride)
        if (s != 1)
            return false;
    return true;
}

void validate_geometry(const FeatureGeometry &geometry) {
    const std::size_t d = geometry.spatial.size();
    if (d < 1 || d > 3)
        throw Error(ErrorCode::shape_mismatch,
                    "geometry dimensionality must be 1, 2 or 3");
    if (geometry.pad.size() != d || geometry.stride.size() != d)
        throw Error(ErrorCode::shape_mismatch,
                    "spatial, pad and stride must have equal rank");
    for (std::size_t i = 0; i < d; ++i) {
        if (geometry.spatial[i] < 1)
            throw Error(ErrorCode::shape_mismatch, "spatial extents must be positive");
        if (geometry.pad[i] < 0)
            throw Error(ErrorCode::shape_mismatch, "pad extents must be non-negative");
        if (geometry.stride[i] < 1)
            throw Error(ErrorCode::shape_mismatch, "stride extents must be positive");
        if (geometry.stride[i] > geometry.spatial[i])
            throw Error(ErrorCode::shape_mismatch,
                        "stride must not exceed the spatial extent");
    }
}

const char *to_string(NormMethod method) {
    switch (method) {
    case NormMethod::exact_circulant_dft: return "exact-circulant-dft";
    case NormMethod::dft_upper_bound: return "dft-upper-bound";
    case NormMethod::power_method: return "power-method";
    case NormMethod::svd_oracle: return "svd-oracle";
    }
    return "unknown";
}

} // namespace specnorm
