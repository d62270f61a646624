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

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "helpers.hpp"
#include "specnorm/bundle.hpp"
#include "specnorm/harness.hpp"
#include "specnorm/oracle.hpp"

using namespace specnorm;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string &tag) {
    static int counter = 0;
    const fs::path dir = fs::temp_directory_path() /
                         ("specnorm-harness-" + tag + "-" +
                          std::to_string(++counter));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

harness::StudyConfig tiny_study() {
    harness::StudyConfig config;
    config.sizes = {7};
    config.trials = 24;
    config.seed = 3;
    config.kernel = {3, 3};
    config.oracle_iters = 12;
    return config;
}

LayerRecord delta_depthwise(const std::string &name, const Extents &stride) {
    Tensor delta = Tensor::zeros({3, 3});
    delta[4] = 1.0;
    std::vector<Tensor> filters{delta};
    FilterBank bank = FilterBank::validate(std::move(filters));

    LayerRecord layer;
    layer.name = name;
    layer.kind = LayerKind::depthwise;
    FeatureGeometry g;
    g.spatial = {10, 10};
    g.pad = bank.pad();
    g.stride = stride;
    g.padding_mode = PaddingMode::zero;
    layer.geometry = g;
    layer.payload = std::move(bank);
    return layer;
}

std::vector<std::string> lines_of(const std::string &table) {
    std::vector<std::string> lines;
    std::string::size_type at = 0;
    while (at < table.size()) {
        const auto end = table.find('\n', at);
        REQUIRE(end != std::string::npos);
        lines.push_back(table.substr(at, end - at));
        at = end + 1;
    }
    return lines;
}

} // namespace

TEST_SUITE("harness") {

TEST_CASE("kernel specs parse and reject malformed text") {
    CHECK(harness::parse_kernel_spec("3") == Extents{3});
    CHECK(harness::parse_kernel_spec("3x5") == Extents{3, 5});
    CHECK(harness::parse_kernel_spec("3x3x3") == Extents{3, 3, 3});
    for (const char *bad : {"", "x3", "3x", "3xx3", "3x3x3x3", "ax3", "-3"})
        CHECK_THROWS_AS(harness::parse_kernel_spec(bad), Error);
}

TEST_CASE("seed derivation is deterministic and spreads out") {
    const std::uint64_t a = harness::derive_seed(1, 2, 3);
    CHECK(a == harness::derive_seed(1, 2, 3));
    CHECK(a != harness::derive_seed(1, 2, 4));
    CHECK(a != harness::derive_seed(1, 3, 3));
    CHECK(a != harness::derive_seed(2, 2, 3));
}

TEST_CASE("study output is byte-stable across runs and thread counts") {
    harness::StudyConfig config = tiny_study();
    config.threads = 1;
    const std::string serial =
        harness::study_table(harness::run_study(config),
                             harness::OutputFormat::csv);
    config.threads = 5;
    const std::string parallel =
        harness::study_table(harness::run_study(config),
                             harness::OutputFormat::csv);
    CHECK(serial == parallel);
    const std::string again =
        harness::study_table(harness::run_study(config),
                             harness::OutputFormat::csv);
    CHECK(serial == again);
}

TEST_CASE("study tables carry the documented header and shape") {
    const auto rows = harness::run_study(tiny_study());
    const std::string table =
        harness::study_table(rows, harness::OutputFormat::csv);
    const auto lines = lines_of(table);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "size,trials,median,q1,q3,seed");
    CHECK(lines[1].find("7,24,") == 0);
    CHECK(table.back() == '\n');
    CHECK(table.find('\r') == std::string::npos);
    CHECK(table.find(',') != std::string::npos);
}

TEST_CASE("study quartiles are ordered and ratios stay above one") {
    harness::StudyConfig config = tiny_study();
    config.sizes = {7, 9};
    const auto rows = harness::run_study(config);
    REQUIRE(rows.size() == 2);
    for (const auto &row : rows) {
        CHECK(row.q1 >= 1.0 - 1e-9);
        CHECK(row.q1 <= row.median);
        CHECK(row.median <= row.q3);
        CHECK(row.trials == 24);
    }
}

TEST_CASE("the gram oracle variant reports tighter-looking ratios") {
    harness::StudyConfig plain = tiny_study();
    plain.trials = 40;
    harness::StudyConfig gram = plain;
    gram.oracle = harness::StudyOracle::gram;
    const double single = harness::run_study(plain)[0].median;
    const double adjoint = harness::run_study(gram)[0].median;
    CHECK(adjoint >= 1.0 - 1e-9);
    /* The adjoint-pair update converges faster, so its fixed-budget oracle
     * sits closer to the true norm and the ratio shrinks. */
    CHECK(adjoint < single);
}

TEST_CASE("study validation rejects unusable configurations") {
    harness::StudyConfig config = tiny_study();
    config.trials = 0;
    CHECK_THROWS_AS(harness::run_study(config), Error);

    config = tiny_study();
    config.oracle_iters = 0;
    CHECK_THROWS_AS(harness::run_study(config), Error);

    config = tiny_study();
    config.sizes = {};
    CHECK_THROWS_AS(harness::run_study(config), Error);

    config = tiny_study();
    config.kernel = {4, 4};
    CHECK_THROWS_AS(harness::run_study(config), Error);

    config = tiny_study();
    config.kernel = {9, 9};
    config.sizes = {7};
    bool caught = false;
    try {
        harness::run_study(config);
    } catch (const Error &e) {
        caught = true;
        CHECK(e.code() == ErrorCode::target_too_small);
    }
    CHECK(caught);
}

TEST_CASE("study JSON parses and mirrors the CSV rows") {
    const auto rows = harness::run_study(tiny_study());
    const std::string text =
        harness::study_table(rows, harness::OutputFormat::json);
    const nlohmann::json parsed = nlohmann::json::parse(text);
    REQUIRE(parsed.is_array());
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0]["size"] == 7);
    CHECK(parsed[0]["trials"] == 24);
    CHECK(parsed[0]["median"].get<double>() ==
          doctest::Approx(rows[0].median).epsilon(1e-15));
}

TEST_CASE("bench rejects repetition counts below three") {
    harness::BenchConfig config;
    config.repetitions = 1;
    const KernelBundle bundle = harness::default_bench_bundle(0);
    CHECK_THROWS_AS(harness::run_bench(bundle, config), Error);
}

TEST_CASE("bench emits one row per layer and method") {
    KernelBundle bundle;
    bundle.layers.push_back(delta_depthwise("dw", {1, 1}));

    LayerRecord pw;
    pw.name = "pw";
    pw.kind = LayerKind::pointwise;
    pw.payload = random_gaussian_matrix(4, 6, 9);
    FeatureGeometry pg;
    pg.spatial = {6, 6};
    pg.pad = {0, 0};
    pg.stride = {1, 1};
    pg.padding_mode = PaddingMode::zero;
    pw.geometry = pg;
    bundle.layers.push_back(std::move(pw));

    LayerRecord fc;
    fc.name = "fc";
    fc.kind = LayerKind::dense;
    DenseMatrix m = DenseMatrix::zeros(6, 6);
    for (int i = 0; i < 6; ++i)
        m.at(i, i) = 1.0 + 0.1 * i;
    fc.payload = std::move(m);
    bundle.layers.push_back(std::move(fc));

    harness::BenchConfig config;
    config.repetitions = 3;
    const auto rows = harness::run_bench(bundle, config);

    auto methods_of = [&](const std::string &layer) {
        std::vector<std::string> out;
        for (const auto &row : rows)
            if (row.layer == layer)
                out.push_back(row.method);
        std::sort(out.begin(), out.end());
        return out;
    };
    CHECK(methods_of("dw") ==
          std::vector<std::string>{"dft-bound", "power-cold", "power-warm"});
    CHECK(methods_of("pw") ==
          std::vector<std::string>{"connectivity-power", "power-cold"});
    CHECK(methods_of("fc") ==
          std::vector<std::string>{"power-cold", "power-warm"});
    for (const auto &row : rows) {
        CHECK(row.median_ns >= 0);
        if (row.method != "dft-bound")
            CHECK(row.iterations >= 1);
    }

    const std::string table =
        harness::bench_table(rows, harness::OutputFormat::csv);
    CHECK(lines_of(table)[0] == "layer,method,median_ns,iterations");
}

TEST_CASE("normalize rewrites the bundle and reports prior norms") {
    const fs::path dir = fresh_dir("normalize");
    const fs::path in = dir / "in" / "bundle.txt";
    const fs::path out = dir / "out" / "bundle.txt";

    KernelBundle bundle;
    LayerRecord pw;
    pw.name = "p";
    pw.kind = LayerKind::pointwise;
    DenseMatrix m = DenseMatrix::zeros(1, 1);
    m.at(0, 0) = 4.0;
    pw.payload = ConnectivityMatrix::validate(std::move(m));
    bundle.layers.push_back(std::move(pw));
    write_bundle(bundle, in.string());

    const auto rows = harness::run_normalize(in.string(), out.string(), 1e-8);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].layer == "p");
    CHECK(rows[0].kind == "pointwise");
    CHECK(rows[0].value == doctest::Approx(4.0).epsilon(1e-8));

    const KernelBundle result = read_bundle(out.string());
    CHECK(result.layers[0].connectivity().at(0, 0) ==
          doctest::Approx(1.0).epsilon(1e-8));

    const std::string table =
        harness::normalize_table(rows, harness::OutputFormat::csv);
    CHECK(lines_of(table)[0] == "layer,kind,method,value,iterations,residual");
}

TEST_CASE("normalizing twice leaves norms at one") {
    const fs::path dir = fresh_dir("idempotent");
    const fs::path a = dir / "a" / "bundle.txt";
    const fs::path b = dir / "b" / "bundle.txt";
    const fs::path c = dir / "c" / "bundle.txt";

    KernelBundle bundle;
    LayerRecord dw;
    dw.name = "dw";
    dw.kind = LayerKind::depthwise;
    FilterBank bank = random_gaussian_filters(2, {3, 3}, 31);
    FeatureGeometry g;
    g.spatial = {12, 12};
    g.pad = bank.pad();
    g.stride = {1, 1};
    g.padding_mode = PaddingMode::zero;
    dw.geometry = g;
    dw.payload = std::move(bank);
    bundle.layers.push_back(std::move(dw));

    LayerRecord fc;
    fc.name = "fc";
    fc.kind = LayerKind::dense;
    DenseMatrix m = DenseMatrix::zeros(5, 4);
    rng::PhiloxStream draws(32, 8);
    for (double &v : m.values)
        v = draws.next_gaussian();
    fc.payload = std::move(m);
    bundle.layers.push_back(std::move(fc));
    write_bundle(bundle, a.string());

    harness::run_normalize(a.string(), b.string(), 1e-8);
    const auto rows = harness::run_normalize(b.string(), c.string(), 1e-8);
    REQUIRE(rows.size() == 2);
    for (const auto &row : rows)
        CHECK(row.value == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("normalize propagates bundle errors") {
    const fs::path dir = fresh_dir("normerr");
    CHECK_THROWS_AS(harness::run_normalize((dir / "missing.txt").string(),
                                           (dir / "out.txt").string(), 1e-6),
                    Error);

    const fs::path in = dir / "bundle.txt";
    KernelBundle bundle;
    bundle.layers.push_back(delta_depthwise("z", {1, 1}));
    std::vector<Tensor> zero{Tensor::zeros({3, 3})};
    bundle.layers[0].payload = FilterBank::validate(std::move(zero));
    write_bundle(bundle, in.string());
    bool caught = false;
    try {
        harness::run_normalize(in.string(), (dir / "out.txt").string(), 1e-6);
    } catch (const Error &e) {
        caught = true;
        CHECK(e.code() == ErrorCode::zero_norm_kernel);
    }
    CHECK(caught);

    CHECK_THROWS_AS(harness::run_normalize(in.string(),
                                           (dir / "out.txt").string(), 0.0),
                    Error);
}

TEST_CASE("report marks strided layers by guarantee mode") {
    const fs::path dir = fresh_dir("report");
    const fs::path in = dir / "bundle.txt";

    KernelBundle bundle;
    bundle.layers.push_back(delta_depthwise("unit", {1, 1}));
    bundle.layers.push_back(delta_depthwise("strided", {2, 2}));
    write_bundle(bundle, in.string());

    harness::ReportConfig guaranteed;
    auto rows = harness::run_report(in.string(), guaranteed);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].bound == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rows[0].guaranteed);
    CHECK(rows[1].bound == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rows[1].guaranteed);

    harness::ReportConfig heuristic;
    heuristic.heuristic_stride = true;
    rows = harness::run_report(in.string(), heuristic);
    CHECK(rows[0].bound == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(rows[0].guaranteed);
    CHECK(rows[1].bound == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_FALSE(rows[1].guaranteed);

    const std::string table =
        harness::report_table(rows, harness::OutputFormat::csv);
    const auto lines = lines_of(table);
    CHECK(lines[0] == "layer,kind,bound,method,guaranteed,oracle,ratio");
    CHECK(lines[1].find("unit,depthwise,1,") == 0);
    CHECK(lines[2].find("false") != std::string::npos);
}

TEST_CASE("report oracle columns cover unit-stride depthwise layers") {
    const fs::path dir = fresh_dir("reportoracle");
    const fs::path in = dir / "bundle.txt";

    KernelBundle bundle;
    LayerRecord dw;
    dw.name = "dw";
    dw.kind = LayerKind::depthwise;
    FilterBank bank = random_gaussian_filters(2, {3, 3}, 41);
    FeatureGeometry g;
    g.spatial = {16, 16};
    g.pad = bank.pad();
    g.stride = {1, 1};
    g.padding_mode = PaddingMode::zero;
    dw.geometry = g;
    dw.payload = std::move(bank);
    bundle.layers.push_back(std::move(dw));

    LayerRecord pw;
    pw.name = "pw";
    pw.kind = LayerKind::pointwise;
    pw.payload = random_gaussian_matrix(6, 4, 42);
    bundle.layers.push_back(std::move(pw));
    write_bundle(bundle, in.string());

    harness::ReportConfig config;
    config.oracle_iters = 30;
    config.seed = 7;
    const auto rows = harness::run_report(in.string(), config);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].has_oracle);
    CHECK(rows[0].oracle > 0.0);
    CHECK(rows[0].ratio == doctest::Approx(rows[0].bound / rows[0].oracle));
    CHECK(rows[0].ratio >= 1.0 - 1e-9);
    CHECK(rows[0].ratio < 2.0);
    CHECK_FALSE(rows[1].has_oracle);

    const std::string table =
        harness::report_table(rows, harness::OutputFormat::csv);
    const auto lines = lines_of(table);
    /* The pointwise row leaves the oracle cells empty. */
    CHECK(lines[2].substr(lines[2].size() - 2) == ",,");
}

TEST_CASE("a thirteen-layer synthetic stack reports sane ratios") {
    const fs::path dir = fresh_dir("stack");
    const fs::path in = dir / "bundle.txt";

    KernelBundle bundle;
    const std::int64_t sizes[13] = {112, 112, 56, 56, 28, 28, 28,
                                    14,  14,  14, 14, 14, 7};
    for (int i = 0; i < 13; ++i) {
        LayerRecord dw;
        dw.name = "dw" + std::to_string(i);
        dw.kind = LayerKind::depthwise;
        FilterBank bank = random_gaussian_filters(
            4, {3, 3}, 600 + static_cast<std::uint64_t>(i));
        FeatureGeometry g;
        g.spatial = {sizes[i], sizes[i]};
        g.pad = bank.pad();
        g.stride = {1, 1};
        g.padding_mode = PaddingMode::zero;
        dw.geometry = g;
        dw.payload = std::move(bank);
        bundle.layers.push_back(std::move(dw));
    }
    write_bundle(bundle, in.string());

    harness::ReportConfig config;
    config.oracle_iters = 30;
    config.seed = 11;
    const auto rows = harness::run_report(in.string(), config);
    REQUIRE(rows.size() == 13);
    double mean = 0.0;
    for (const auto &row : rows) {
        REQUIRE(row.has_oracle);
        CHECK(row.ratio >= 1.0 - 1e-9);
        mean += row.ratio - 1.0;
    }
    mean /= 13.0;
    CHECK(mean > 0.0);
    CHECK(mean < 0.12);
}

} // TEST_SUITE
