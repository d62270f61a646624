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

/* C interface of the specnorm shared library.
 *
 * All functions return a specnorm_status; on failure the thread-local
 * message and fine-grained code are available through
 * specnorm_last_error_message / specnorm_last_error_code. Objects behind
 * opaque handles are created and released by matching create/destroy
 * pairs. Strings returned through char** are heap-allocated and released
 * with specnorm_string_free. */

#ifndef SPECNORM_H
#define SPECNORM_H

#include <stdint.h>

#if defined(_WIN32)
#define SPECNORM_API __declspec(dllexport)
#else
#define SPECNORM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum specnorm_status {
    SPECNORM_OK = 0,
    SPECNORM_ERR_USAGE = 2,
    SPECNORM_ERR_DATA = 3,
    SPECNORM_ERR_NUMERIC = 4
} specnorm_status;

/* Fine-grained error identities behind the coarse status. */
typedef enum specnorm_error_code {
    SPECNORM_ERROR_NONE = 0,
    SPECNORM_ERROR_EVEN_KERNEL_EXTENT = 1,
    SPECNORM_ERROR_SHAPE_MISMATCH = 2,
    SPECNORM_ERROR_NON_FINITE_ENTRY = 3,
    SPECNORM_ERROR_TARGET_TOO_SMALL = 4,
    SPECNORM_ERROR_NON_CONVERGENCE = 5,
    SPECNORM_ERROR_ZERO_VECTOR = 6,
    SPECNORM_ERROR_NUMERICAL_FAILURE = 7,
    SPECNORM_ERROR_ZERO_NORM_KERNEL = 8,
    SPECNORM_ERROR_BUNDLE_PARSE = 9,
    SPECNORM_ERROR_USAGE = 10,
    SPECNORM_ERROR_IO = 11
} specnorm_error_code;

typedef enum specnorm_method {
    SPECNORM_METHOD_EXACT_CIRCULANT_DFT = 0,
    SPECNORM_METHOD_DFT_UPPER_BOUND = 1,
    SPECNORM_METHOD_POWER = 2,
    SPECNORM_METHOD_SVD_ORACLE = 3
} specnorm_method;

typedef enum specnorm_padding_mode {
    SPECNORM_PAD_CIRCULANT = 0,
    SPECNORM_PAD_ZERO = 1
} specnorm_padding_mode;

typedef enum specnorm_format {
    SPECNORM_FORMAT_CSV = 0,
    SPECNORM_FORMAT_JSON = 1
} specnorm_format;

typedef enum specnorm_study_oracle {
    SPECNORM_STUDY_ORACLE_SINGLE_SIDED = 0,
    SPECNORM_STUDY_ORACLE_GRAM = 1
} specnorm_study_oracle;

typedef struct specnorm_geometry {
    int32_t dims; /* 1, 2 or 3; only the first `dims` entries are read */
    int64_t spatial[3];
    int64_t pad[3];
    int64_t stride[3];
    int32_t padding_mode; /* specnorm_padding_mode */
} specnorm_geometry;

typedef struct specnorm_estimate {
    double value;
    int32_t method; /* specnorm_method */
    int32_t is_upper_bound;
    int64_t iterations;
    double residual;
} specnorm_estimate;

typedef struct specnorm_power_config {
    double epsilon;
    int64_t max_iterations;
    uint64_t seed;
} specnorm_power_config;

typedef struct specnorm_filter_bank specnorm_filter_bank;
typedef struct specnorm_connectivity specnorm_connectivity;
typedef struct specnorm_warm_state specnorm_warm_state;

SPECNORM_API uint32_t specnorm_abi_version(void);
SPECNORM_API const char *specnorm_version_string(void);

SPECNORM_API const char *specnorm_last_error_message(void);
SPECNORM_API int specnorm_last_error_code(void);

SPECNORM_API void specnorm_string_free(char *text);

/* ---- filter banks (depthwise layers) ---- */

/* data holds channels * prod(kernel_extents) doubles, channel-major then
 * row-major within each filter. */
SPECNORM_API specnorm_status specnorm_filter_bank_create(
    const double *data, int64_t channels, int32_t dims,
    const int64_t *kernel_extents, specnorm_filter_bank **out);

SPECNORM_API specnorm_status specnorm_filter_bank_random(
    int64_t channels, int32_t dims, const int64_t *kernel_extents,
    uint64_t seed, specnorm_filter_bank **out);

SPECNORM_API void specnorm_filter_bank_destroy(specnorm_filter_bank *bank);

SPECNORM_API int64_t specnorm_filter_bank_channels(
    const specnorm_filter_bank *bank);

/* Exact circulant norm of one channel; geometry must be circulant mode
 * with unit stride. */
SPECNORM_API specnorm_status specnorm_circulant_norm(
    const specnorm_filter_bank *bank, int64_t channel,
    const specnorm_geometry *geometry, specnorm_estimate *out);

/* Guaranteed upper bound for the whole bank; geometry must be zero mode
 * with pad equal to the kernel half-widths and unit stride. */
SPECNORM_API specnorm_status specnorm_depthwise_bound(
    const specnorm_filter_bank *bank, const specnorm_geometry *geometry,
    specnorm_estimate *out);

/* heuristic == 0 keeps the guaranteed bound; nonzero divides by
 * prod(sqrt(stride_i)) and clears is_upper_bound. */
SPECNORM_API specnorm_status specnorm_stride_adjust(
    const specnorm_estimate *bound, const int64_t *stride, int32_t dims,
    int32_t heuristic, specnorm_estimate *out);

/* Fixed-budget single-sided power iteration on the zero-padded depthwise
 * operator (the accuracy-study oracle). */
SPECNORM_API specnorm_status specnorm_depthwise_oracle_norm(
    const specnorm_filter_bank *bank, const specnorm_geometry *geometry,
    int64_t iterations, uint64_t seed, specnorm_estimate *out);

/* ---- pointwise layers ---- */

SPECNORM_API specnorm_status specnorm_connectivity_create(
    const double *row_major, int64_t rows, int64_t cols,
    specnorm_connectivity **out);

SPECNORM_API void specnorm_connectivity_destroy(specnorm_connectivity *theta);

/* Pass state == NULL for one-shot use. Otherwise *state == NULL cold
 * starts and stores the converged state; a non-NULL *state warm starts
 * and is replaced. States are released with specnorm_warm_state_destroy.
 * On SPECNORM_ERR_NUMERIC with code SPECNORM_ERROR_NON_CONVERGENCE the
 * budget-capped estimate is still written to *out. */
SPECNORM_API specnorm_status specnorm_connectivity_norm(
    const specnorm_connectivity *theta, const specnorm_power_config *config,
    specnorm_warm_state **state, specnorm_estimate *out);

/* Baseline power method on the full per-pixel operator. */
SPECNORM_API specnorm_status specnorm_pointwise_naive_norm(
    const specnorm_connectivity *theta, const int64_t *spatial, int32_t dims,
    const specnorm_power_config *config, specnorm_estimate *out);

SPECNORM_API void specnorm_warm_state_destroy(specnorm_warm_state *state);
SPECNORM_API int64_t specnorm_warm_state_length(const specnorm_warm_state *state);

/* ---- generic power method ---- */

typedef void (*specnorm_apply_fn)(const double *in, double *out, void *user);

/* apply writes rows doubles from cols inputs; adjoint the reverse. The
 * non-convergence payload behaves as for specnorm_connectivity_norm. */
SPECNORM_API specnorm_status specnorm_power_iterate(
    specnorm_apply_fn apply, specnorm_apply_fn apply_adjoint, int64_t rows,
    int64_t cols, void *user, const specnorm_power_config *config,
    specnorm_warm_state **state, specnorm_estimate *out);

/* ---- scaling and composition ---- */

/* kind 0 = hard (multiplier K), kind 1 = soft (multiplier K * tanh(s)). */
SPECNORM_API specnorm_status specnorm_scaling_multiplier(int32_t kind, double K,
                                                         double s, double *out);

/* log_space == 0: product of bounds; nonzero: sum of log bounds. */
SPECNORM_API specnorm_status specnorm_chain_bound(const double *bounds,
                                                  int64_t count,
                                                  int32_t log_space,
                                                  double *out);

/* ---- harness entry points ---- */

/* CSV or JSON study table; oracle_kind is a specnorm_study_oracle.
 * threads == 0 picks the hardware thread count (output bytes do not
 * depend on it). */
SPECNORM_API specnorm_status specnorm_run_study(
    const int64_t *sizes, int64_t size_count, int64_t trials, uint64_t seed,
    const int64_t *kernel, int32_t kernel_dims, int64_t oracle_iters,
    int32_t oracle_kind, int32_t threads, int32_t format, char **out);

/* Synthetic default layers when bundle_path is NULL. */
SPECNORM_API specnorm_status specnorm_run_bench(const char *bundle_path,
                                                int64_t repetitions,
                                                double epsilon, uint64_t seed,
                                                int32_t format, char **out);

SPECNORM_API specnorm_status specnorm_run_normalize(const char *in_path,
                                                    const char *out_path,
                                                    double epsilon,
                                                    int32_t format, char **out);

SPECNORM_API specnorm_status specnorm_run_report(const char *in_path,
                                                 int32_t heuristic_stride,
                                                 int64_t oracle_iters,
                                                 double epsilon, uint64_t seed,
                                                 int32_t format, char **out);

#ifdef __cplusplus
}
#endif

#endif
