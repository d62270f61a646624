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

#include "specnorm.h"

#include <cstring>
#include <new>
#include <string>

#include "specnorm/dft.hpp"
#include "specnorm/harness.hpp"
#include "specnorm/model.hpp"
#include "specnorm/normalize.hpp"
#include "specnorm/power.hpp"
#include "specnorm/types.hpp"

struct specnorm_filter_bank {
    specnorm::FilterBank bank;
};

struct specnorm_connectivity {
    specnorm::ConnectivityMatrix theta;
};

struct specnorm_warm_state {
    specnorm::power::WarmStartState state;
};

namespace {

thread_local std::string g_last_message;
thread_local int g_last_code = SPECNORM_ERROR_NONE;

int map_code(specnorm::ErrorCode code) {
    using specnorm::ErrorCode;
    switch (code) {
    case ErrorCode::even_kernel_extent: return SPECNORM_ERROR_EVEN_KERNEL_EXTENT;
    case ErrorCode::shape_mismatch: return SPECNORM_ERROR_SHAPE_MISMATCH;
    case ErrorCode::non_finite_entry: return SPECNORM_ERROR_NON_FINITE_ENTRY;
    case ErrorCode::target_too_small: return SPECNORM_ERROR_TARGET_TOO_SMALL;
    case ErrorCode::non_convergence: return SPECNORM_ERROR_NON_CONVERGENCE;
    case ErrorCode::zero_vector: return SPECNORM_ERROR_ZERO_VECTOR;
    case ErrorCode::numerical_failure: return SPECNORM_ERROR_NUMERICAL_FAILURE;
    case ErrorCode::zero_norm_kernel: return SPECNORM_ERROR_ZERO_NORM_KERNEL;
    case ErrorCode::bundle_parse_error: return SPECNORM_ERROR_BUNDLE_PARSE;
    case ErrorCode::usage_error: return SPECNORM_ERROR_USAGE;
    case ErrorCode::io_error: return SPECNORM_ERROR_IO;
    }
    return SPECNORM_ERROR_NONE;
}

specnorm_status status_of(const specnorm::Error &error) {
    switch (error.exit_category()) {
    case 2: return SPECNORM_ERR_USAGE;
    case 4: return SPECNORM_ERR_NUMERIC;
    default: return SPECNORM_ERR_DATA;
    }
}

void clear_error() {
    g_last_message.clear();
    g_last_code = SPECNORM_ERROR_NONE;
}

specnorm_status record_error(const specnorm::Error &error) {
    g_last_message = error.what();
    g_last_code = map_code(error.code());
    return status_of(error);
}

specnorm_status record_unknown(const std::exception &error) {
    g_last_message = error.what();
    g_last_code = SPECNORM_ERROR_NUMERICAL_FAILURE;
    return SPECNORM_ERR_NUMERIC;
}

specnorm_status record_usage(const char *message) {
    g_last_message = message;
    g_last_code = SPECNORM_ERROR_USAGE;
    return SPECNORM_ERR_USAGE;
}

template <typename Fn> specnorm_status guarded(Fn &&fn) {
    clear_error();
    try {
        return fn();
    } catch (const specnorm::Error &error) {
        return record_error(error);
    } catch (const std::bad_alloc &) {
        g_last_message = "out of memory";
        g_last_code = SPECNORM_ERROR_NUMERICAL_FAILURE;
        return SPECNORM_ERR_NUMERIC;
    } catch (const std::exception &error) {
        return record_unknown(error);
    }
}

specnorm::FeatureGeometry to_geometry(const specnorm_geometry *geometry) {
    if (geometry == nullptr)
        throw specnorm::Error(specnorm::ErrorCode::usage_error,
                              "geometry must not be NULL");
    if (geometry->dims < 1 || geometry->dims > 3)
        throw specnorm::Error(specnorm::ErrorCode::usage_error,
                              "geometry dims must be 1, 2 or 3");
    specnorm::FeatureGeometry out;
    for (int32_t a = 0; a < geometry->dims; ++a) {
        out.spatial.push_back(geometry->spatial[a]);
        out.pad.push_back(geometry->pad[a]);
        out.stride.push_back(geometry->stride[a]);
    }
    out.padding_mode = geometry->padding_mode == SPECNORM_PAD_CIRCULANT
                           ? specnorm::PaddingMode::circulant
                           : specnorm::PaddingMode::zero;
    return out;
}

void write_estimate(const specnorm::NormEstimate &estimate,
                    specnorm_estimate *out) {
    out->value = estimate.value;
    switch (estimate.method) {
    case specnorm::NormMethod::exact_circulant_dft:
        out->method = SPECNORM_METHOD_EXACT_CIRCULANT_DFT;
        break;
    case specnorm::NormMethod::dft_upper_bound:
        out->method = SPECNORM_METHOD_DFT_UPPER_BOUND;
        break;
    case specnorm::NormMethod::power_method:
        out->method = SPECNORM_METHOD_POWER;
        break;
    case specnorm::NormMethod::svd_oracle:
        out->method = SPECNORM_METHOD_SVD_ORACLE;
        break;
    }
    out->is_upper_bound = estimate.is_upper_bound ? 1 : 0;
    out->iterations = estimate.iterations;
    out->residual = estimate.residual;
}

specnorm::power::PowerConfig to_config(const specnorm_power_config *config) {
    specnorm::power::PowerConfig out;
    if (config != nullptr) {
        out.epsilon = config->epsilon;
        out.max_iterations = config->max_iterations;
        out.seed = config->seed;
    }
    return out;
}

char *dup_string(const std::string &text) {
    char *out = new char[text.size() + 1];
    std::memcpy(out, text.c_str(), text.size() + 1);
    return out;
}

specnorm::harness::OutputFormat to_format(int32_t format) {
    if (format == SPECNORM_FORMAT_JSON)
        return specnorm::harness::OutputFormat::json;
    if (format != SPECNORM_FORMAT_CSV)
        throw specnorm::Error(specnorm::ErrorCode::usage_error,
                              "unknown output format");
    return specnorm::harness::OutputFormat::csv;
}

/* Shared by the power entry points: runs the iteration, threads the warm
 * state through, and keeps the budget-capped estimate reachable. */
template <typename Run>
specnorm_status power_entry(Run &&run, specnorm_warm_state **state,
                            specnorm_estimate *out) {
    if (out == nullptr)
        return record_usage("output estimate must not be NULL");
    const specnorm::power::WarmStartState *warm = nullptr;
    if (state != nullptr && *state != nullptr)
        warm = &(*state)->state;
    try {
        specnorm::power::PowerResult result = run(warm);
        write_estimate(result.estimate, out);
        if (state != nullptr) {
            if (*state == nullptr)
                *state = new specnorm_warm_state();
            (*state)->state = std::move(result.state);
        }
        return SPECNORM_OK;
    } catch (const specnorm::power::NonConvergenceError &error) {
        write_estimate(error.estimate, out);
        if (state != nullptr) {
            if (*state == nullptr)
                *state = new specnorm_warm_state();
            (*state)->state = error.state;
        }
        return record_error(error);
    }
}

} // namespace

extern "C" {

uint32_t specnorm_abi_version(void) { return 1; }

const char *specnorm_version_string(void) { return "specnorm 1.0.0"; }

const char *specnorm_last_error_message(void) { return g_last_message.c_str(); }

int specnorm_last_error_code(void) { return g_last_code; }

void specnorm_string_free(char *text) { delete[] text; }

specnorm_status specnorm_filter_bank_create(const double *data,
                                            int64_t channels, int32_t dims,
                                            const int64_t *kernel_extents,
                                            specnorm_filter_bank **out) {
    return guarded([&]() -> specnorm_status {
        if (data == nullptr || kernel_extents == nullptr || out == nullptr)
            return record_usage("arguments must not be NULL");
        if (dims < 1 || dims > 3)
            return record_usage("dims must be 1, 2 or 3");
        specnorm::Extents shape(kernel_extents, kernel_extents + dims);
        const std::int64_t per = specnorm::numel(shape);
        std::vector<specnorm::Tensor> filters;
        for (int64_t c = 0; c < channels; ++c)
            filters.emplace_back(
                shape, std::vector<double>(data + c * per, data + (c + 1) * per));
        *out = new specnorm_filter_bank{
            specnorm::FilterBank::validate(std::move(filters))};
        return SPECNORM_OK;
    });
}

specnorm_status specnorm_filter_bank_random(int64_t channels, int32_t dims,
                                            const int64_t *kernel_extents,
                                            uint64_t seed,
                                            specnorm_filter_bank **out) {
    return guarded([&]() -> specnorm_status {
        if (kernel_extents == nullptr || out == nullptr)
            return record_usage("arguments must not be NULL");
        if (dims < 1 || dims > 3)
            return record_usage("dims must be 1, 2 or 3");
        specnorm::Extents shape(kernel_extents, kernel_extents + dims);
        *out = new specnorm_filter_bank{
            specnorm::random_gaussian_filters(channels, shape, seed)};
        return SPECNORM_OK;
    });
}

void specnorm_filter_bank_destroy(specnorm_filter_bank *bank) { delete bank; }

int64_t specnorm_filter_bank_channels(const specnorm_filter_bank *bank) {
    return bank == nullptr ? 0 : bank->bank.channels();
}

specnorm_status specnorm_circulant_norm(const specnorm_filter_bank *bank,
                                        int64_t channel,
                                        const specnorm_geometry *geometry,
                                        specnorm_estimate *out) {
    return guarded([&]() -> specnorm_status {
        if (bank == nullptr || out == nullptr)
            return record_usage("arguments must not be NULL");
        if (channel < 0 || channel >= bank->bank.channels())
            return record_usage("channel index out of range");
        write_estimate(specnorm::dft::circulant_spectral_norm(
                           bank->bank.filter(channel), to_geometry(geometry)),
                       out);
        return SPECNORM_OK;
    });
}

specnorm_status specnorm_depthwise_bound(const specnorm_filter_bank *bank,
                                         const specnorm_geometry *geometry,
                                         specnorm_estimate *out) {
    return guarded([&]() -> specnorm_status {
        if (bank == nullptr || out == nullptr)
            return record_usage("arguments must not be NULL");
        write_estimate(specnorm::dft::depthwise_spectral_bound(
                           bank->bank, to_geometry(geometry)),
                       out);
        return SPECNORM_OK;
    });
}

specnorm_status specnorm_stride_adjust(const specnorm_estimate *bound,
                                       const int64_t *stride, int32_t dims,
                                       int32_t heuristic,
                                       specnorm_estimate *out) {
    return guarded([&]() -> specnorm_status {
        if (bound == nullptr || stride == nullptr || out == nullptr)
            return record_usage("arguments must not be NULL");
        if (dims < 1 || dims > 3)
            return record_usage("dims must be 1, 2 or 3");
        specnorm::NormEstimate in;
        in.value = bound->value;
        in.method = bound->method == SPECNORM_METHOD_EXACT_CIRCULANT_DFT
                        ? specnorm::NormMethod::exact_circulant_dft
                        : specnorm::NormMethod::dft_upper_bound;
        in.iterations = bound->iterations;
        in.residual = bound->residual;
        in.is_upper_bound = bound->is_upper_bound != 0;
        write_estimate(
            specnorm::dft::stride_adjusted_estimate(
                in, specnorm::Extents(stride, stride + dims), heuristic != 0),
            out);
        return SPECNORM_OK;
    });
}

specnorm_status specnorm_depthwise_oracle_norm(const specnorm_filter_bank *bank,
                                               const specnorm_geometry *geometry,
                                               int64_t iterations, uint64_t seed,
                                               specnorm_estimate *out) {
    return guarded([&]() -> specnorm_status {
        if (bank == nullptr || out == nullptr)
            return record_usage("arguments must not be NULL");
        const specnorm::power::LinearOperator op =
            specnorm::power::depthwise_zero_padded_operator(
                bank->bank, to_geometry(geometry));
        write_estimate(specnorm::power::plain_power_norm(op, iterations, seed),
                       out);
        return SPECNORM_OK;
    });
}

specnorm_status specnorm_connectivity_create(const double *row_major,
                                             int64_t rows, int64_t cols,
                                             specnorm_connectivity **out) {
    return guarded([&]() -> specnorm_status {
        if (row_major == nullptr || out == nullptr)
            return record_usage("arguments must not be NULL");
        specnorm::DenseMatrix m;
        m.rows = rows;
        m.cols = cols;
        if (rows > 0 && cols > 0)
            m.values.assign(row_major, row_major + rows * cols);
        *out = new specnorm_connectivity{
            specnorm::ConnectivityMatrix::validate(std::move(m))};
        return SPECNORM_OK;
    });
}

void specnorm_connectivity_destroy(specnorm_connectivity *theta) {
    delete theta;
}

specnorm_status specnorm_connectivity_norm(const specnorm_connectivity *theta,
                                           const specnorm_power_config *config,
                                           specnorm_warm_state **state,
                                           specnorm_estimate *out) {
    return guarded([&]() -> specnorm_status {
        if (theta == nullptr)
            return record_usage("connectivity must not be NULL");
        return power_entry(
            [&](const specnorm::power::WarmStartState *warm) {
                return specnorm::power::connectivity_spectral_norm(
                    theta->theta, to_config(config), warm);
            },
            state, out);
    });
}

specnorm_status specnorm_pointwise_naive_norm(const specnorm_connectivity *theta,
                                              const int64_t *spatial,
                                              int32_t dims,
                                              const specnorm_power_config *config,
                                              specnorm_estimate *out) {
    return guarded([&]() -> specnorm_status {
        if (theta == nullptr || spatial == nullptr || out == nullptr)
            return record_usage("arguments must not be NULL");
        if (dims < 1 || dims > 3)
            return record_usage("dims must be 1, 2 or 3");
        return power_entry(
            [&](const specnorm::power::WarmStartState *warm) {
                return specnorm::power::power_iterate(
                    specnorm::power::pointwise_operator(
                        theta->theta, specnorm::Extents(spatial, spatial + dims)),
                    to_config(config), warm);
            },
            nullptr, out);
    });
}

void specnorm_warm_state_destroy(specnorm_warm_state *state) { delete state; }

int64_t specnorm_warm_state_length(const specnorm_warm_state *state) {
    return state == nullptr ? 0
                            : static_cast<int64_t>(state->state.v.size());
}

specnorm_status specnorm_power_iterate(specnorm_apply_fn apply,
                                       specnorm_apply_fn apply_adjoint,
                                       int64_t rows, int64_t cols, void *user,
                                       const specnorm_power_config *config,
                                       specnorm_warm_state **state,
                                       specnorm_estimate *out) {
    return guarded([&]() -> specnorm_status {
        if (apply == nullptr || apply_adjoint == nullptr)
            return record_usage("callbacks must not be NULL");
        specnorm::power::LinearOperator op;
        op.rows = rows;
        op.cols = cols;
        op.apply = [apply, user](std::span<const double> in,
                                 std::span<double> y) {
            apply(in.data(), y.data(), user);
        };
        op.apply_adjoint = [apply_adjoint, user](std::span<const double> in,
                                                 std::span<double> y) {
            apply_adjoint(in.data(), y.data(), user);
        };
        return power_entry(
            [&](const specnorm::power::WarmStartState *warm) {
                return specnorm::power::power_iterate(op, to_config(config),
                                                      warm);
            },
            state, out);
    });
}

specnorm_status specnorm_scaling_multiplier(int32_t kind, double K, double s,
                                            double *out) {
    return guarded([&]() -> specnorm_status {
        if (out == nullptr)
            return record_usage("output must not be NULL");
        if (kind != 0 && kind != 1)
            return record_usage("kind must be 0 (hard) or 1 (soft)");
        specnorm::ScalingPolicy policy;
        policy.kind = kind == 0 ? specnorm::ScalingKind::hard
                                : specnorm::ScalingKind::soft;
        policy.K = K;
        policy.s = s;
        *out = specnorm::scaling_multiplier(policy);
        return SPECNORM_OK;
    });
}

specnorm_status specnorm_chain_bound(const double *bounds, int64_t count,
                                     int32_t log_space, double *out) {
    return guarded([&]() -> specnorm_status {
        if (bounds == nullptr || out == nullptr)
            return record_usage("arguments must not be NULL");
        const std::vector<double> values(bounds, bounds + count);
        *out = log_space != 0 ? specnorm::chain_lipschitz_log_bound(values)
                              : specnorm::chain_lipschitz_bound(values);
        return SPECNORM_OK;
    });
}

specnorm_status specnorm_run_study(const int64_t *sizes, int64_t size_count,
                                   int64_t trials, uint64_t seed,
                                   const int64_t *kernel, int32_t kernel_dims,
                                   int64_t oracle_iters, int32_t oracle_kind,
                                   int32_t threads, int32_t format, char **out) {
    return guarded([&]() -> specnorm_status {
        if (sizes == nullptr || kernel == nullptr || out == nullptr)
            return record_usage("arguments must not be NULL");
        if (kernel_dims < 1 || kernel_dims > 3)
            return record_usage("kernel dims must be 1, 2 or 3");
        specnorm::harness::StudyConfig config;
        config.sizes.assign(sizes, sizes + size_count);
        config.trials = trials;
        config.seed = seed;
        config.kernel.assign(kernel, kernel + kernel_dims);
        config.oracle_iters = oracle_iters;
        config.oracle = oracle_kind == SPECNORM_STUDY_ORACLE_GRAM
                            ? specnorm::harness::StudyOracle::gram
                            : specnorm::harness::StudyOracle::single_sided;
        config.threads = threads;
        *out = dup_string(specnorm::harness::study_table(
            specnorm::harness::run_study(config), to_format(format)));
        return SPECNORM_OK;
    });
}

specnorm_status specnorm_run_bench(const char *bundle_path,
                                   int64_t repetitions, double epsilon,
                                   uint64_t seed, int32_t format, char **out) {
    return guarded([&]() -> specnorm_status {
        if (out == nullptr)
            return record_usage("output must not be NULL");
        specnorm::harness::BenchConfig config;
        config.repetitions = repetitions;
        config.epsilon = epsilon;
        config.seed = seed;
        const specnorm::KernelBundle bundle =
            bundle_path == nullptr
                ? specnorm::harness::default_bench_bundle(seed)
                : specnorm::read_bundle(bundle_path);
        *out = dup_string(specnorm::harness::bench_table(
            specnorm::harness::run_bench(bundle, config), to_format(format)));
        return SPECNORM_OK;
    });
}

specnorm_status specnorm_run_normalize(const char *in_path,
                                       const char *out_path, double epsilon,
                                       int32_t format, char **out) {
    return guarded([&]() -> specnorm_status {
        if (in_path == nullptr || out_path == nullptr || out == nullptr)
            return record_usage("arguments must not be NULL");
        *out = dup_string(specnorm::harness::normalize_table(
            specnorm::harness::run_normalize(in_path, out_path, epsilon),
            to_format(format)));
        return SPECNORM_OK;
    });
}

specnorm_status specnorm_run_report(const char *in_path,
                                    int32_t heuristic_stride,
                                    int64_t oracle_iters, double epsilon,
                                    uint64_t seed, int32_t format, char **out) {
    return guarded([&]() -> specnorm_status {
        if (in_path == nullptr || out == nullptr)
            return record_usage("arguments must not be NULL");
        specnorm::harness::ReportConfig config;
        config.heuristic_stride = heuristic_stride != 0;
        config.oracle_iters = oracle_iters;
        config.epsilon = epsilon;
        config.seed = seed;
        *out = dup_string(specnorm::harness::report_table(
            specnorm::harness::run_report(in_path, config), to_format(format)));
        return SPECNORM_OK;
    });
}

} // extern "C"
