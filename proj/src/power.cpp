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

#include "specnorm/power.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include <Eigen/Dense>

#include "specnorm/oracle.hpp"
#include "specnorm/rng.hpp"

namespace specnorm::power {

namespace {

/* Stream id for power-method cold starts; filter generation uses 0. */
constexpr std::uint64_t kInitStream = 1;

double norm2(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v)
        acc += x * x;
    return std::sqrt(acc);
}

void random_unit(std::vector<double> &v, rng::PhiloxStream &stream) {
    for (;;) {
        for (double &x : v)
            x = stream.next_gaussian();
        const double n = norm2(v);
        if (n > 0.0) {
            for (double &x : v)
                x /= n;
            return;
        }
    }
}

void check_operator(const LinearOperator &op) {
    if (op.rows < 1 || op.cols < 1)
        throw Error(ErrorCode::shape_mismatch, "operator must be non-empty");
    if (!op.apply || !op.apply_adjoint)
        throw Error(ErrorCode::usage_error, "operator callbacks must be set");
}

void init_iterate(std::vector<double> &v, const WarmStartState *warm,
                  std::int64_t cols, rng::PhiloxStream &stream) {
    if (warm != nullptr) {
        if (static_cast<std::int64_t>(warm->v.size()) != cols)
            throw Error(ErrorCode::shape_mismatch,
                        "warm-start vector length does not match the operator");
        v = warm->v;
        const double n = norm2(v);
        if (n == 0.0)
            throw Error(ErrorCode::zero_vector, "warm-start vector is zero");
        for (double &x : v)
            x /= n;
    } else {
        random_unit(v, stream);
    }
}

struct GramStep {
    double sigma = 0.0;
    double residual = 0.0;
    bool zero = false;
};

/* One step w = A^T A v; on success v is replaced by w / ||w||. */
GramStep gram_step(const LinearOperator &op, std::vector<double> &v,
                   std::vector<double> &u, std::vector<double> &w) {
    op.apply(v, u);
    op.apply_adjoint(u, w);
    double nw = 0.0;
    for (double x : w)
        nw += x * x;
    nw = std::sqrt(nw);
    if (!std::isfinite(nw))
        throw Error(ErrorCode::numerical_failure,
                    "power iterate left the finite range");
    GramStep step;
    if (nw == 0.0) {
        step.zero = true;
        return step;
    }
    step.sigma = std::sqrt(nw);
    double res = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double diff = w[i] - nw * v[i];
        res += diff * diff;
    }
    step.residual = std::sqrt(res);
    for (std::size_t i = 0; i < w.size(); ++i)
        v[i] = w[i] / nw;
    return step;
}

PowerResult run_gram_iteration(const LinearOperator &op,
                               const PowerConfig &config,
                               const WarmStartState *warm,
                               std::int64_t fixed_iterations) {
    check_operator(op);
    if (config.max_iterations < 1)
        throw Error(ErrorCode::usage_error, "max_iterations must be positive");
    if (fixed_iterations == 0 && config.epsilon <= 0.0)
        throw Error(ErrorCode::usage_error, "epsilon must be positive");

    rng::PhiloxStream stream(config.seed, kInitStream);
    std::vector<double> v(static_cast<std::size_t>(op.cols));
    std::vector<double> u(static_cast<std::size_t>(op.rows));
    std::vector<double> w(static_cast<std::size_t>(op.cols));
    init_iterate(v, warm, op.cols, stream);

    const std::int64_t budget =
        fixed_iterations > 0 ? fixed_iterations : config.max_iterations;
    bool restarted = false;
    GramStep last;
    for (std::int64_t it = 1; it <= budget; ++it) {
        last = gram_step(op, v, u, w);
        if (last.zero) {
            if (restarted)
                throw Error(ErrorCode::zero_vector,
                            "operator maps the iterate to the null space");
            restarted = true;
            random_unit(v, stream);
            continue;
        }
        if (fixed_iterations == 0 && last.residual < config.epsilon) {
            NormEstimate estimate{last.sigma, NormMethod::power_method, it,
                                  last.residual, false};
            return {estimate, WarmStartState{v, last.sigma}};
        }
    }
    NormEstimate estimate{last.sigma, NormMethod::power_method, budget,
                          last.residual, false};
    if (fixed_iterations > 0)
        return {estimate, WarmStartState{v, last.sigma}};
    throw NonConvergenceError(estimate, WarmStartState{v, last.sigma});
}

} // namespace

PowerResult power_iterate(const LinearOperator &op, const PowerConfig &config,
                          const WarmStartState *warm) {
    return run_gram_iteration(op, config, warm, 0);
}

PowerResult power_iterate_fixed(const LinearOperator &op,
                                std::int64_t iterations,
                                const PowerConfig &config,
                                const WarmStartState *warm) {
    if (iterations < 1)
        throw Error(ErrorCode::usage_error, "iteration budget must be positive");
    return run_gram_iteration(op, config, warm, iterations);
}

NormEstimate plain_power_norm(const LinearOperator &op, std::int64_t iterations,
                              std::uint64_t seed) {
    check_operator(op);
    if (op.rows != op.cols)
        throw Error(ErrorCode::shape_mismatch,
                    "single-sided iteration requires a square operator");
    if (iterations < 1)
        throw Error(ErrorCode::usage_error, "iteration budget must be positive");

    rng::PhiloxStream stream(seed, kInitStream);
    std::vector<double> v(static_cast<std::size_t>(op.cols));
    std::vector<double> u(static_cast<std::size_t>(op.rows));
    random_unit(v, stream);

    double sigma = 0.0;
    double previous = 0.0;
    bool restarted = false;
    for (std::int64_t it = 1; it <= iterations; ++it) {
        op.apply(v, u);
        const double nu = norm2(u);
        if (!std::isfinite(nu))
            throw Error(ErrorCode::numerical_failure,
                        "power iterate left the finite range");
        if (nu == 0.0) {
            if (restarted)
                throw Error(ErrorCode::zero_vector,
                            "operator maps the iterate to the null space");
            restarted = true;
            random_unit(v, stream);
            continue;
        }
        previous = sigma;
        sigma = nu;
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = u[i] / nu;
    }
    NormEstimate estimate;
    estimate.value = sigma;
    estimate.method = NormMethod::power_method;
    estimate.iterations = iterations;
    estimate.residual = std::abs(sigma - previous);
    estimate.is_upper_bound = false;
    return estimate;
}

LinearOperator matrix_operator(const DenseMatrix &matrix) {
    if (matrix.rows < 1 || matrix.cols < 1)
        throw Error(ErrorCode::shape_mismatch, "matrix must be non-empty");
    using RowMat =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    auto m = std::make_shared<RowMat>(
        Eigen::Map<const RowMat>(matrix.values.data(), matrix.rows, matrix.cols));

    LinearOperator op;
    op.rows = matrix.rows;
    op.cols = matrix.cols;
    op.apply = [m](std::span<const double> in, std::span<double> out) {
        Eigen::Map<const Eigen::VectorXd> x(in.data(),
                                            static_cast<Eigen::Index>(in.size()));
        Eigen::Map<Eigen::VectorXd> y(out.data(),
                                      static_cast<Eigen::Index>(out.size()));
        y.noalias() = (*m) * x;
    };
    op.apply_adjoint = [m](std::span<const double> in, std::span<double> out) {
        Eigen::Map<const Eigen::VectorXd> y(in.data(),
                                            static_cast<Eigen::Index>(in.size()));
        Eigen::Map<Eigen::VectorXd> x(out.data(),
                                      static_cast<Eigen::Index>(out.size()));
        x.noalias() = m->transpose() * y;
    };
    return op;
}

PowerResult connectivity_spectral_norm(const ConnectivityMatrix &theta,
                                       const PowerConfig &config,
                                       const WarmStartState *warm) {
    return power_iterate(matrix_operator(theta.entries()), config, warm);
}

LinearOperator pointwise_operator(const ConnectivityMatrix &theta,
                                  const Extents &spatial) {
    const std::int64_t pixels = numel(spatial);
    if (pixels < 1)
        throw Error(ErrorCode::shape_mismatch, "spatial extents must be positive");
    auto m = std::make_shared<Eigen::MatrixXd>(theta.rows(), theta.cols());
    for (std::int64_t i = 0; i < theta.rows(); ++i)
        for (std::int64_t j = 0; j < theta.cols(); ++j)
            (*m)(i, j) = theta.at(i, j);

    using RowMat =
        Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    LinearOperator op;
    op.rows = theta.rows() * pixels;
    op.cols = theta.cols() * pixels;
    op.apply = [m, pixels](std::span<const double> in, std::span<double> out) {
        Eigen::Map<const RowMat> x(in.data(), m->cols(), pixels);
        Eigen::Map<RowMat> y(out.data(), m->rows(), pixels);
        y.noalias() = (*m) * x;
    };
    op.apply_adjoint = [m, pixels](std::span<const double> in,
                                   std::span<double> out) {
        Eigen::Map<const RowMat> y(in.data(), m->rows(), pixels);
        Eigen::Map<RowMat> x(out.data(), m->cols(), pixels);
        x.noalias() = m->transpose() * y;
    };
    return op;
}

NormEstimate pointwise_operator_norm_naive(const ConnectivityMatrix &theta,
                                           const Extents &spatial,
                                           const PowerConfig &config) {
    return power_iterate(pointwise_operator(theta, spatial), config).estimate;
}

namespace {

/* Same-size zero-padded cross-correlation of one channel, written into a
 * preallocated slice. Fast 2D path; generic fallback mirrors the oracle
 * reference implementation. */
void correlate_same_2d(const Tensor &filter, std::int64_t height,
                       std::int64_t width, const double *x, double *y) {
    const std::int64_t kh = filter.shape[0];
    const std::int64_t kw = filter.shape[1];
    const std::int64_t ph = (kh - 1) / 2;
    const std::int64_t pw = (kw - 1) / 2;
    for (std::int64_t r = 0; r < height; ++r) {
        const std::int64_t j0 = std::max<std::int64_t>(0, ph - r);
        const std::int64_t j1 = std::min(kh, height + ph - r);
        for (std::int64_t c = 0; c < width; ++c) {
            const std::int64_t i0 = std::max<std::int64_t>(0, pw - c);
            const std::int64_t i1 = std::min(kw, width + pw - c);
            double acc = 0.0;
            for (std::int64_t j = j0; j < j1; ++j) {
                const double *xrow = x + (r + j - ph) * width + (c - pw);
                const double *frow = filter.values.data() + j * kw;
                for (std::int64_t i = i0; i < i1; ++i)
                    acc += frow[i] * xrow[i];
            }
            y[r * width + c] = acc;
        }
    }
}

void correlate_same(const Tensor &filter, const Extents &spatial,
                    const double *x, double *y) {
    if (spatial.size() == 2) {
        correlate_same_2d(filter, spatial[0], spatial[1], x, y);
        return;
    }
    Tensor input;
    input.shape = spatial;
    input.values.assign(x, x + numel(spatial));
    const Tensor out =
        oracle::zero_padded_correlate(filter, input, Extents(spatial.size(), 1));
    std::copy(out.values.begin(), out.values.end(), y);
}

} // namespace

LinearOperator depthwise_zero_padded_operator(const FilterBank &bank,
                                              const FeatureGeometry &geometry) {
    validate_geometry(geometry);
    if (geometry.padding_mode != PaddingMode::zero)
        throw Error(ErrorCode::shape_mismatch,
                    "depthwise operator requires zero mode");
    if (!geometry.unit_stride())
        throw Error(ErrorCode::shape_mismatch,
                    "depthwise operator requires unit stride");
    if (geometry.pad != bank.pad())
        throw Error(ErrorCode::shape_mismatch,
                    "geometry pad must match the bank half-widths");
    for (std::size_t a = 0; a < geometry.spatial.size(); ++a)
        if (bank.kernel_shape()[a] > geometry.spatial[a])
            throw Error(ErrorCode::target_too_small,
                        "filter exceeds the data extents");

    const std::int64_t pixels = numel(geometry.spatial);
    const std::int64_t channels = bank.channels();
    auto forward = std::make_shared<std::vector<Tensor>>(bank.filters());
    auto backward = std::make_shared<std::vector<Tensor>>();
    backward->reserve(static_cast<std::size_t>(channels));
    for (const Tensor &f : *forward)
        backward->push_back(oracle::flip_all_axes(f));
    const Extents spatial = geometry.spatial;

    LinearOperator op;
    op.rows = channels * pixels;
    op.cols = channels * pixels;
    op.apply = [forward, spatial, pixels](std::span<const double> in,
                                          std::span<double> out) {
        for (std::size_t c = 0; c < forward->size(); ++c)
            correlate_same((*forward)[c], spatial,
                           in.data() + static_cast<std::int64_t>(c) * pixels,
                           out.data() + static_cast<std::int64_t>(c) * pixels);
    };
    op.apply_adjoint = [backward, spatial, pixels](std::span<const double> in,
                                                   std::span<double> out) {
        for (std::size_t c = 0; c < backward->size(); ++c)
            correlate_same((*backward)[c], spatial,
                           in.data() + static_cast<std::int64_t>(c) * pixels,
                           out.data() + static_cast<std::int64_t>(c) * pixels);
    };
    return op;
}

} // namespace specnorm::power
