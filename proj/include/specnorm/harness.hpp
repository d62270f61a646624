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

#ifndef SPECNORM_HARNESS_HPP
#define SPECNORM_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "specnorm/bundle.hpp"
#include "specnorm/types.hpp"

namespace specnorm::harness {

enum class OutputFormat { csv, json };

/* "3", "3x3", "3,3,3" and friends. */
Extents parse_kernel_spec(const std::string &spec);

/* Counter-derived child seed; stable across platforms and thread counts. */
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

/* ---- accuracy study ---- */

struct StudyRow {
    std::int64_t size = 0;
    std::int64_t trials = 0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    std::uint64_t seed = 0;
};

enum class StudyOracle {
    /* Fixed-budget single-sided iteration on the operator itself. */
    single_sided,
    /* Fixed-budget adjoint-pair iteration (same update as power_iterate). */
    gram,
};

struct StudyConfig {
    std::vector<std::int64_t> sizes = {7, 8, 16, 32, 64, 128};
    std::int64_t trials = 200;
    std::uint64_t seed = 0;
    Extents kernel = {3, 3};
    std::int64_t oracle_iters = 30;
    StudyOracle oracle = StudyOracle::single_sided;
    /* 0 picks the hardware thread count. Output bytes never depend on it. */
    int threads = 0;
};

/* Per resolution: `trials` random Gaussian banks, the depthwise bound
 * against the fixed-budget matrix-free oracle, quartiles of the ratio. */
std::vector<StudyRow> run_study(const StudyConfig &config);

std::string study_table(const std::vector<StudyRow> &rows, OutputFormat format);

/* ---- timing bench ---- */

struct BenchRow {
    std::string layer;
    std::string method;
    std::int64_t median_ns = 0;
    std::int64_t iterations = 0;
};

struct BenchConfig {
    std::int64_t repetitions = 7;
    double epsilon = 0.01;
    std::uint64_t seed = 0;
};

/* Synthetic default layers: a 32-channel 3x3 depthwise layer at 64x64, a
 * 64x128 pointwise layer at 56x56, and a small dense layer. */
KernelBundle default_bench_bundle(std::uint64_t seed);

/* Methods per layer kind: depthwise get dft-bound, power-cold and
 * power-warm on the full operator; pointwise get connectivity-power plus
 * power-cold/power-warm on the naive full operator; dense get
 * power-cold/power-warm on the matrix. Median wall clock per method. */
std::vector<BenchRow> run_bench(const KernelBundle &bundle,
                                const BenchConfig &config);

std::string bench_table(const std::vector<BenchRow> &rows, OutputFormat format);

/* ---- bundle normalization ---- */

struct NormalizeRow {
    std::string layer;
    std::string kind;
    std::string method;
    double value = 0.0;
    std::int64_t iterations = 0;
    double residual = 0.0;
};

/* Reads, normalizes (and scales where a policy is present), writes the
 * new bundle, and reports the pre-normalization estimates. */
std::vector<NormalizeRow> run_normalize(const std::string &in_path,
                                        const std::string &out_path,
                                        double epsilon);

std::string normalize_table(const std::vector<NormalizeRow> &rows,
                            OutputFormat format);

/* ---- layer norm report ---- */

struct ReportRow {
    std::string layer;
    std::string kind;
    double bound = 0.0;
    std::string method;
    bool guaranteed = false;
    bool has_oracle = false;
    double oracle = 0.0;
    double ratio = 0.0;
};

struct ReportConfig {
    bool heuristic_stride = false;
    /* > 0 adds a fixed-budget oracle column for unit-stride depthwise
     * layers and the bound/oracle ratio. */
    std::int64_t oracle_iters = 0;
    double epsilon = 1e-6;
    std::uint64_t seed = 0;
};

std::vector<ReportRow> run_report(const std::string &in_path,
                                  const ReportConfig &config);

std::string report_table(const std::vector<ReportRow> &rows,
                         OutputFormat format);

} // namespace specnorm::harness

#endif
