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

#include "specnorm/dft.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include <fftw3.h>

namespace specnorm::dft {

namespace {

/* FFTW plan creation is not thread-safe; executing one plan on distinct
 * arrays is. Plans are cached per shape and created under a lock. */
class PlanCache {
  public:
    static PlanCache &instance() {
        static PlanCache cache;
        return cache;
    }

    fftw_plan plan_for(const Extents &shape) {
        std::lock_guard<std::mutex> guard(mutex_);
        auto it = plans_.find(shape);
        if (it != plans_.end())
            return it->second;

        std::vector<int> dims(shape.begin(), shape.end());
        const std::int64_t n = numel(shape);
        const std::int64_t complex_n = complex_count(shape);
        double *in = fftw_alloc_real(static_cast<std::size_t>(n));
        fftw_complex *out =
            fftw_alloc_complex(static_cast<std::size_t>(complex_n));
        fftw_plan plan = fftw_plan_dft_r2c(
            static_cast<int>(dims.size()), dims.data(), in, out,
            FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(in);
        fftw_free(out);
        if (plan == nullptr)
            throw Error(ErrorCode::numerical_failure,
                        "failed to create an FFT plan");
        plans_.emplace(shape, plan);
        return plan;
    }

    static std::int64_t complex_count(const Extents &shape) {
        std::int64_t n = 1;
        for (std::size_t a = 0; a + 1 < shape.size(); ++a)
            n *= shape[a];
        return n * (shape.back() / 2 + 1);
    }

  private:
    PlanCache() = default;
    std::mutex mutex_;
    std::map<Extents, fftw_plan> plans_;
};

std::vector<std::complex<double>> half_spectrum(const Tensor &input) {
    if (input.shape.empty())
        throw Error(ErrorCode::shape_mismatch, "cannot transform a scalar");
    fftw_plan plan = PlanCache::instance().plan_for(input.shape);
    const std::int64_t complex_n = PlanCache::complex_count(input.shape);

    std::vector<double> in(input.values.begin(), input.values.end());
    std::vector<std::complex<double>> out(static_cast<std::size_t>(complex_n));
    fftw_execute_dft_r2c(plan, in.data(),
                         reinterpret_cast<fftw_complex *>(out.data()));
    return out;
}

} // namespace

Tensor zero_pad_filter(const Tensor &filter, const Extents &target) {
    if (filter.shape.size() != target.size())
        throw Error(ErrorCode::shape_mismatch,
                    "filter and target dimensionality differ");
    for (std::size_t a = 0; a < target.size(); ++a)
        if (target[a] < filter.shape[a])
            throw Error(ErrorCode::target_too_small,
                        "pad target is smaller than the filter");

    Tensor out = Tensor::zeros(target);
    const Extents tstr = row_major_strides(target);
    Extents j(filter.shape.size(), 0);
    const std::int64_t total = numel(filter.shape);
    for (std::int64_t src = 0; src < total; ++src) {
        std::int64_t dst = 0;
        for (std::size_t a = 0; a < j.size(); ++a)
            dst += j[a] * tstr[a];
        out[dst] = filter[src];
        for (std::size_t a = j.size(); a-- > 0;) {
            if (++j[a] < filter.shape[a])
                break;
            j[a] = 0;
        }
    }
    return out;
}

std::vector<std::complex<double>> forward_dft(const Tensor &input) {
    const std::vector<std::complex<double>> half = half_spectrum(input);
    const Extents &shape = input.shape;
    const std::int64_t last = shape.back();
    const std::int64_t half_last = last / 2 + 1;
    const std::int64_t lead = numel(shape) / last;

    /* Expand the Hermitian half spectrum to the full grid:
     * F[k] = conj(F[(-k) mod N]). */
    std::vector<std::complex<double>> full(
        static_cast<std::size_t>(numel(shape)));
    Extents lead_shape(shape.begin(), shape.end() - 1);
    const Extents lead_str = row_major_strides(lead_shape);
    for (std::int64_t row = 0; row < lead; ++row) {
        /* Row index with every leading coordinate negated mod its extent. */
        std::int64_t rem = row;
        std::int64_t mirrored = 0;
        for (std::size_t a = 0; a < lead_shape.size(); ++a) {
            const std::int64_t coord = rem / lead_str[a];
            rem %= lead_str[a];
            const std::int64_t neg =
                coord == 0 ? 0 : lead_shape[a] - coord;
            mirrored += neg * lead_str[a];
        }
        for (std::int64_t k = 0; k < last; ++k) {
            if (k < half_last)
                full[static_cast<std::size_t>(row * last + k)] =
                    half[static_cast<std::size_t>(row * half_last + k)];
            else
                full[static_cast<std::size_t>(row * last + k)] = std::conj(
                    half[static_cast<std::size_t>(mirrored * half_last +
                                                  (last - k))]);
        }
    }
    return full;
}

Tensor dft_magnitudes(const Tensor &input) {
    const std::vector<std::complex<double>> full = forward_dft(input);
    Tensor out = Tensor::zeros(input.shape);
    for (std::size_t i = 0; i < full.size(); ++i)
        out.values[i] = std::abs(full[i]);
    return out;
}

PaddedSpectrum padded_spectrum(const Tensor &filter, const Extents &target,
                               std::int64_t source_channel) {
    PaddedSpectrum spectrum;
    spectrum.magnitudes = dft_magnitudes(zero_pad_filter(filter, target));
    spectrum.source_channel = source_channel;
    return spectrum;
}

double max_dft_magnitude(const Tensor &filter, const Extents &target) {
    const Tensor padded = zero_pad_filter(filter, target);
    const std::vector<std::complex<double>> half = half_spectrum(padded);
    double best = 0.0;
    for (const std::complex<double> &v : half)
        best = std::max(best, std::abs(v));
    return best;
}

NormEstimate circulant_spectral_norm(const Tensor &filter,
                                     const FeatureGeometry &geometry) {
    validate_geometry(geometry);
    if (geometry.padding_mode != PaddingMode::circulant)
        throw Error(ErrorCode::shape_mismatch,
                    "circulant norm requires circulant mode");
    if (!geometry.unit_stride())
        throw Error(ErrorCode::shape_mismatch,
                    "circulant norm requires unit stride");

    NormEstimate estimate;
    estimate.value = max_dft_magnitude(filter, geometry.spatial);
    estimate.method = NormMethod::exact_circulant_dft;
    estimate.iterations = 0;
    estimate.residual = 0.0;
    estimate.is_upper_bound = false;
    return estimate;
}

NormEstimate depthwise_spectral_bound(const FilterBank &bank,
                                      const FeatureGeometry &geometry) {
    validate_geometry(geometry);
    if (geometry.padding_mode != PaddingMode::zero)
        throw Error(ErrorCode::shape_mismatch,
                    "depthwise bound requires zero mode");
    if (!geometry.unit_stride())
        throw Error(ErrorCode::shape_mismatch,
                    "depthwise bound requires unit stride");
    const Extents p = bank.pad();
    if (geometry.pad != p)
        throw Error(ErrorCode::shape_mismatch,
                    "geometry pad must match the bank half-widths");

    /* Transform target is the padded-image grid N + 2p. */
    Extents target(geometry.spatial.size());
    for (std::size_t a = 0; a < target.size(); ++a)
        target[a] = geometry.spatial[a] + 2 * p[a];

    double best = 0.0;
    for (std::int64_t c = 0; c < bank.channels(); ++c)
        best = std::max(best, max_dft_magnitude(bank.filter(c), target));

    NormEstimate estimate;
    estimate.value = best;
    estimate.method = NormMethod::dft_upper_bound;
    estimate.iterations = 0;
    estimate.residual = 0.0;
    estimate.is_upper_bound = true;
    return estimate;
}

NormEstimate stride_adjusted_estimate(const NormEstimate &bound,
                                      const Extents &stride, bool heuristic) {
    NormEstimate out = bound;
    if (!heuristic)
        return out;
    double product = 1.0;
    for (std::int64_t s : stride) {
        if (s < 1)
            throw Error(ErrorCode::shape_mismatch, "stride extents must be positive");
        product *= static_cast<double>(s);
    }
    /* prod_i sqrt(nu_i) == sqrt(prod_i nu_i); one square root keeps
     * integer stride products exact. */
    const double factor = std::sqrt(product);
    if (factor > 1.0) {
        out.value /= factor;
        out.is_upper_bound = false;
    }
    return out;
}

} // namespace specnorm::dft
