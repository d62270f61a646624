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

#ifndef SPECNORM_POWER_HPP
#define SPECNORM_POWER_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "specnorm/model.hpp"
#include "specnorm/types.hpp"

namespace specnorm::power {

/* Estimated leading right-singular vector plus the last norm estimate.
 * For a pointwise layer this is C_in reals, independent of resolution. */
struct WarmStartState {
    std::vector<double> v;
    double sigma = 0.0;
};

struct PowerConfig {
    double epsilon = 0.01;
    std::int64_t max_iterations = 1000;
    std::uint64_t seed = 0;
};

/* Matrix-free linear map with its adjoint: apply writes y = A x and
 * apply_adjoint writes x = A^T y. */
struct LinearOperator {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::function<void(std::span<const double>, std::span<double>)> apply;
    std::function<void(std::span<const double>, std::span<double>)> apply_adjoint;
};

struct PowerResult {
    NormEstimate estimate;
    WarmStartState state;
};

/* Raised when max_iterations is reached with residual >= epsilon; the
 * best estimate and iterate are carried in the payload. */
class NonConvergenceError : public Error {
  public:
    NonConvergenceError(NormEstimate estimate, WarmStartState state)
        : Error(ErrorCode::non_convergence,
                "power method hit max iterations before the residual "
                "dropped below epsilon"),
          estimate(estimate), state(std::move(state)) {}

    NormEstimate estimate;
    WarmStartState state;
};

/* Iterates v <- A^T A v / ||A^T A v|| with sigma = sqrt(||A^T A v||),
 * stopping once ||A^T A v - sigma^2 v|| < epsilon. Cold starts draw a
 * seeded Gaussian vector; pass warm to resume from a previous state. */
PowerResult power_iterate(const LinearOperator &op, const PowerConfig &config,
                          const WarmStartState *warm = nullptr);

/* Same update, but exactly `iterations` steps and no stopping test. */
PowerResult power_iterate_fixed(const LinearOperator &op,
                                std::int64_t iterations,
                                const PowerConfig &config,
                                const WarmStartState *warm = nullptr);

/* Single-sided iteration v <- A v / ||A v|| on a square operator, with
 * sigma read off as ||A v||. The residual records the last change of
 * sigma. This is the fixed-budget estimator used by the accuracy study. */
NormEstimate plain_power_norm(const LinearOperator &op, std::int64_t iterations,
                              std::uint64_t seed);

/* Spectral norm of a pointwise convolution via its tap matrix; the warm
 * state has length C_in regardless of any spatial resolution. */
PowerResult connectivity_spectral_norm(const ConnectivityMatrix &theta,
                                       const PowerConfig &config,
                                       const WarmStartState *warm = nullptr);

/* Baseline: power method on the full per-pixel mixing operator over a
 * C_in x N_1 x ... x N_d input. Agrees with connectivity_spectral_norm. */
NormEstimate pointwise_operator_norm_naive(const ConnectivityMatrix &theta,
                                           const Extents &spatial,
                                           const PowerConfig &config);

/* Dense row-major matrix as a LinearOperator. */
LinearOperator matrix_operator(const DenseMatrix &matrix);

LinearOperator pointwise_operator(const ConnectivityMatrix &theta,
                                  const Extents &spatial);

/* The zero-padded depthwise operator of a whole bank at unit stride, in
 * channel-major vectorization. Applies agree with the reference
 * correlations from the oracle module. */
LinearOperator depthwise_zero_padded_operator(const FilterBank &bank,
                                              const FeatureGeometry &geometry);

} // namespace specnorm::power

#endif
