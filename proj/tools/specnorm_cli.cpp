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

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "specnorm.h"

namespace {

/* Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical error.
 * specnorm_status already uses these values. */

bool parse_kernel(const std::string &spec, std::vector<int64_t> &out) {
    out.clear();
    std::string token;
    for (char c : spec + "x") {
        if (c == 'x' || c == ',') {
            if (token.empty())
                return false;
            try {
                std::size_t used = 0;
                out.push_back(std::stoll(token, &used));
                if (used != token.size())
                    return false;
            } catch (const std::exception &) {
                return false;
            }
            token.clear();
        } else {
            token.push_back(c);
        }
    }
    return !out.empty() && out.size() <= 3;
}

int emit(const char *text, const std::string &out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return 0;
    }
    std::ofstream out(out_path, std::ios::trunc);
    out << text;
    if (!out) {
        std::cerr << "error: cannot write " << out_path << "\n";
        return 3;
    }
    return 0;
}

int finish(specnorm_status status, char *text, const std::string &out_path) {
    if (status != SPECNORM_OK) {
        std::cerr << "error: " << specnorm_last_error_message() << "\n";
        specnorm_string_free(text);
        return static_cast<int>(status);
    }
    const int rc = emit(text, out_path);
    specnorm_string_free(text);
    return rc;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Spectral norms, bounds and normalization for depthwise and "
                 "pointwise convolution layers"};
    app.require_subcommand(1);

    std::string out_path;
    std::string format = "csv";
    std::uint64_t seed = 0;
    double epsilon = 0.01;

    /* study */
    auto *study = app.add_subcommand(
        "study", "Accuracy study: bound / fixed-budget oracle per resolution");
    std::vector<std::int64_t> sizes = {7, 8, 16, 32, 64, 128};
    std::int64_t trials = 200;
    std::string kernel_spec = "3x3";
    std::int64_t oracle_iters = 30;
    std::string oracle_kind = "single-sided";
    int threads = 0;
    study->add_option("--sizes", sizes, "feature resolutions")
        ->delimiter(',')
        ->capture_default_str();
    study->add_option("--trials", trials, "random kernels per resolution")
        ->capture_default_str();
    study->add_option("--seed", seed, "master seed")->capture_default_str();
    study->add_option("--kernel", kernel_spec, "kernel extents, e.g. 3x3")
        ->capture_default_str();
    study->add_option("--oracle-iters", oracle_iters,
                      "fixed oracle iteration budget")
        ->capture_default_str();
    study
        ->add_option("--oracle", oracle_kind,
                     "oracle iteration: single-sided or gram")
        ->check(CLI::IsMember({"single-sided", "gram"}))
        ->capture_default_str();
    study->add_option("--threads", threads, "worker threads (0 = auto)")
        ->capture_default_str();
    study->add_option("--out", out_path, "write the table to a file");
    study->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();

    /* bench */
    auto *bench = app.add_subcommand(
        "bench", "Wall-clock comparison of the norm methods per layer");
    std::string bundle_path;
    std::int64_t repetitions = 7;
    bench->add_option("--bundle", bundle_path,
                      "bundle manifest (default: synthetic layers)");
    bench->add_option("--repetitions", repetitions, "timing repetitions (>= 3)")
        ->capture_default_str();
    bench->add_option("--epsilon", epsilon, "power-method precision")
        ->capture_default_str();
    bench->add_option("--seed", seed, "master seed")->capture_default_str();
    bench->add_option("--out", out_path, "write the table to a file");
    bench->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();

    /* normalize */
    auto *normalize = app.add_subcommand(
        "normalize", "Normalize every layer of a bundle and write a new one");
    std::string in_path;
    std::string bundle_out;
    normalize->add_option("--in", in_path, "input bundle manifest")->required();
    normalize->add_option("--out", bundle_out, "output bundle manifest")
        ->required();
    normalize->add_option("--epsilon", epsilon, "power-method precision")
        ->capture_default_str();
    normalize->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();

    /* report */
    auto *report = app.add_subcommand(
        "report", "Per-layer norm bounds for an existing bundle");
    bool heuristic_stride = false;
    std::int64_t report_oracle_iters = 0;
    double report_epsilon = 1e-6;
    report->add_option("--in", in_path, "input bundle manifest")->required();
    report->add_flag("--heuristic-stride", heuristic_stride,
                     "divide strided bounds by prod(sqrt(stride)); estimates "
                     "lose the guarantee");
    report->add_option("--oracle-iters", report_oracle_iters,
                       "add a fixed-budget oracle column (0 = off)")
        ->capture_default_str();
    report->add_option("--epsilon", report_epsilon, "power-method precision")
        ->capture_default_str();
    report->add_option("--seed", seed, "oracle seed")->capture_default_str();
    report->add_option("--out", out_path, "write the table to a file");
    report->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return 2;
    }

    const int32_t fmt =
        format == "json" ? SPECNORM_FORMAT_JSON : SPECNORM_FORMAT_CSV;
    char *text = nullptr;

    if (study->parsed()) {
        std::vector<int64_t> kernel;
        if (!parse_kernel(kernel_spec, kernel)) {
            std::cerr << "error: malformed kernel spec '" << kernel_spec
                      << "'\n";
            return 2;
        }
        const int32_t oracle = oracle_kind == "gram"
                                   ? SPECNORM_STUDY_ORACLE_GRAM
                                   : SPECNORM_STUDY_ORACLE_SINGLE_SIDED;
        const specnorm_status status = specnorm_run_study(
            sizes.data(), static_cast<int64_t>(sizes.size()), trials, seed,
            kernel.data(), static_cast<int32_t>(kernel.size()), oracle_iters,
            oracle, threads, fmt, &text);
        return finish(status, text, out_path);
    }
    if (bench->parsed()) {
        const specnorm_status status = specnorm_run_bench(
            bundle_path.empty() ? nullptr : bundle_path.c_str(), repetitions,
            epsilon, seed, fmt, &text);
        return finish(status, text, out_path);
    }
    if (normalize->parsed()) {
        const specnorm_status status = specnorm_run_normalize(
            in_path.c_str(), bundle_out.c_str(), epsilon, fmt, &text);
        return finish(status, text, "");
    }
    const specnorm_status status = specnorm_run_report(
        in_path.c_str(), heuristic_stride ? 1 : 0, report_oracle_iters,
        report_epsilon, seed, fmt, &text);
    return finish(status, text, out_path);
}
