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

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <doctest.h>

#include <specnorm.h>

#include "helpers.hpp"
#include "specnorm/bundle.hpp"
#include "specnorm/dft.hpp"

namespace fs = std::filesystem;

namespace {

specnorm_geometry zero_geometry_2d(int64_t n, int64_t pad) {
    specnorm_geometry g{};
    g.dims = 2;
    g.spatial[0] = n;
    g.spatial[1] = n;
    g.pad[0] = pad;
    g.pad[1] = pad;
    g.stride[0] = 1;
    g.stride[1] = 1;
    g.padding_mode = SPECNORM_PAD_ZERO;
    return g;
}

struct MatrixCallback {
    int64_t rows;
    int64_t cols;
    std::vector<double> values;
};

void matrix_apply(const double *in, double *out, void *user) {
    const auto *m = static_cast<const MatrixCallback *>(user);
    for (int64_t r = 0; r < m->rows; ++r) {
        double acc = 0.0;
        for (int64_t c = 0; c < m->cols; ++c)
            acc += m->values[static_cast<std::size_t>(r * m->cols + c)] * in[c];
        out[r] = acc;
    }
}

void matrix_apply_adjoint(const double *in, double *out, void *user) {
    const auto *m = static_cast<const MatrixCallback *>(user);
    for (int64_t c = 0; c < m->cols; ++c) {
        double acc = 0.0;
        for (int64_t r = 0; r < m->rows; ++r)
            acc += m->values[static_cast<std::size_t>(r * m->cols + c)] * in[r];
        out[c] = acc;
    }
}

} // namespace

TEST_SUITE("capi") {

TEST_CASE("version identifiers are present") {
    CHECK(specnorm_abi_version() >= 1u);
    const char *version = specnorm_version_string();
    REQUIRE(version != nullptr);
    CHECK(std::strlen(version) > 0);
}

TEST_CASE("filter banks round trip through the handle API") {
    const double taps[18] = {0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0,
                             0.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, 0.0};
    const int64_t kernel[2] = {3, 3};
    specnorm_filter_bank *bank = nullptr;
    REQUIRE(specnorm_filter_bank_create(taps, 2, 2, kernel, &bank) ==
            SPECNORM_OK);
    REQUIRE(bank != nullptr);
    CHECK(specnorm_filter_bank_channels(bank) == 2);

    const specnorm_geometry g = zero_geometry_2d(8, 1);
    specnorm_estimate est{};
    REQUIRE(specnorm_depthwise_bound(bank, &g, &est) == SPECNORM_OK);
    CHECK(est.value == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(est.method == SPECNORM_METHOD_DFT_UPPER_BOUND);
    CHECK(est.is_upper_bound != 0);
    specnorm_filter_bank_destroy(bank);
}

TEST_CASE("bound values agree with the native library") {
    specnorm_filter_bank *bank = nullptr;
    const int64_t kernel[2] = {3, 3};
    REQUIRE(specnorm_filter_bank_random(3, 2, kernel, 99, &bank) == SPECNORM_OK);

    const specnorm_geometry g = zero_geometry_2d(10, 1);
    specnorm_estimate est{};
    REQUIRE(specnorm_depthwise_bound(bank, &g, &est) == SPECNORM_OK);

    const specnorm::FilterBank native =
        specnorm::random_gaussian_filters(3, {3, 3}, 99);
    const double expect =
        specnorm::dft::depthwise_spectral_bound(
            native, specnorm::testing::unit_zero_geometry(native, {10, 10}))
            .value;
    CHECK(est.value == doctest::Approx(expect).epsilon(1e-15));
    specnorm_filter_bank_destroy(bank);
}

TEST_CASE("circulant norms and oracle norms flow through the API") {
    specnorm_filter_bank *bank = nullptr;
    const int64_t kernel[2] = {3, 3};
    REQUIRE(specnorm_filter_bank_random(1, 2, kernel, 7, &bank) == SPECNORM_OK);

    specnorm_geometry circ = zero_geometry_2d(9, 0);
    circ.padding_mode = SPECNORM_PAD_CIRCULANT;
    specnorm_estimate exact{};
    REQUIRE(specnorm_circulant_norm(bank, 0, &circ, &exact) == SPECNORM_OK);
    CHECK(exact.method == SPECNORM_METHOD_EXACT_CIRCULANT_DFT);
    CHECK(exact.value > 0.0);

    const specnorm_geometry g = zero_geometry_2d(9, 1);
    specnorm_estimate bound{};
    REQUIRE(specnorm_depthwise_bound(bank, &g, &bound) == SPECNORM_OK);
    specnorm_estimate oracle{};
    REQUIRE(specnorm_depthwise_oracle_norm(bank, &g, 30, 5, &oracle) ==
            SPECNORM_OK);
    CHECK(oracle.value > 0.0);
    CHECK(oracle.value <= bound.value * (1.0 + 1e-9));
    CHECK(oracle.iterations == 30);
    specnorm_filter_bank_destroy(bank);
}

TEST_CASE("stride adjustment halves the bound for stride two") {
    specnorm_estimate bound{};
    bound.value = 4.0;
    bound.method = SPECNORM_METHOD_DFT_UPPER_BOUND;
    bound.is_upper_bound = 1;
    const int64_t stride[2] = {2, 2};

    specnorm_estimate kept{};
    REQUIRE(specnorm_stride_adjust(&bound, stride, 2, 0, &kept) == SPECNORM_OK);
    CHECK(kept.value == doctest::Approx(4.0));
    CHECK(kept.is_upper_bound != 0);

    specnorm_estimate adjusted{};
    REQUIRE(specnorm_stride_adjust(&bound, stride, 2, 1, &adjusted) ==
            SPECNORM_OK);
    CHECK(adjusted.value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(adjusted.is_upper_bound == 0);
}

TEST_CASE("errors set the status, code and message") {
    const double taps[4] = {1.0, 2.0, 3.0, 4.0};
    const int64_t kernel[2] = {2, 2};
    specnorm_filter_bank *bank = nullptr;
    CHECK(specnorm_filter_bank_create(taps, 1, 2, kernel, &bank) ==
          SPECNORM_ERR_DATA);
    CHECK(bank == nullptr);
    CHECK(specnorm_last_error_code() == SPECNORM_ERROR_EVEN_KERNEL_EXTENT);
    const char *message = specnorm_last_error_message();
    REQUIRE(message != nullptr);
    CHECK(std::strlen(message) > 0);

    CHECK(specnorm_filter_bank_create(nullptr, 1, 2, kernel, &bank) ==
          SPECNORM_ERR_USAGE);
    CHECK(specnorm_scaling_multiplier(0, -1.0, 0.0, nullptr) ==
          SPECNORM_ERR_USAGE);
}

TEST_CASE("connectivity norms support warm state reuse") {
    const specnorm::ConnectivityMatrix native =
        specnorm::random_gaussian_matrix(12, 20, 31);
    std::vector<double> values = native.entries().values;

    specnorm_connectivity *theta = nullptr;
    REQUIRE(specnorm_connectivity_create(values.data(), 12, 20, &theta) ==
            SPECNORM_OK);

    specnorm_power_config config{};
    config.epsilon = 1e-8;
    config.max_iterations = 1000;
    config.seed = 0;

    specnorm_warm_state *state = nullptr;
    specnorm_estimate cold{};
    REQUIRE(specnorm_connectivity_norm(theta, &config, &state, &cold) ==
            SPECNORM_OK);
    REQUIRE(state != nullptr);
    CHECK(specnorm_warm_state_length(state) == 20);
    CHECK(cold.iterations >= 1);

    specnorm_estimate warm{};
    REQUIRE(specnorm_connectivity_norm(theta, &config, &state, &warm) ==
            SPECNORM_OK);
    CHECK(warm.value == doctest::Approx(cold.value).epsilon(1e-6));
    CHECK(warm.iterations <= cold.iterations);

    specnorm_estimate naive{};
    const int64_t spatial[2] = {5, 5};
    REQUIRE(specnorm_pointwise_naive_norm(theta, spatial, 2, &config, &naive) ==
            SPECNORM_OK);
    CHECK(naive.value == doctest::Approx(cold.value).epsilon(1e-3));

    specnorm_warm_state_destroy(state);
    specnorm_connectivity_destroy(theta);
}

TEST_CASE("the generic power entry accepts plain function callbacks") {
    MatrixCallback m{2, 2, {3.0, 0.0, 0.0, 1.0}};
    specnorm_power_config config{};
    config.epsilon = 1e-8;
    config.max_iterations = 1000;
    config.seed = 0;

    specnorm_estimate est{};
    REQUIRE(specnorm_power_iterate(matrix_apply, matrix_apply_adjoint, 2, 2, &m,
                                   &config, nullptr, &est) == SPECNORM_OK);
    CHECK(est.value == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(est.method == SPECNORM_METHOD_POWER);
}

TEST_CASE("non-convergence still writes the budget-capped estimate") {
    MatrixCallback m{3, 3, {2.0, 0.1, 0.0, 0.1, 1.5, 0.2, 0.0, 0.2, 1.0}};
    specnorm_power_config config{};
    config.epsilon = 1e-16;
    config.max_iterations = 2;
    config.seed = 0;

    specnorm_estimate est{};
    CHECK(specnorm_power_iterate(matrix_apply, matrix_apply_adjoint, 3, 3, &m,
                                 &config, nullptr, &est) ==
          SPECNORM_ERR_NUMERIC);
    CHECK(specnorm_last_error_code() == SPECNORM_ERROR_NON_CONVERGENCE);
    CHECK(est.iterations == 2);
    CHECK(est.value > 0.0);
}

TEST_CASE("scaling and chain helpers mirror the native rules") {
    double out = 0.0;
    REQUIRE(specnorm_scaling_multiplier(0, 5.0, 0.0, &out) == SPECNORM_OK);
    CHECK(out == doctest::Approx(5.0));
    REQUIRE(specnorm_scaling_multiplier(1, 5.0, 3.0, &out) == SPECNORM_OK);
    CHECK(out == doctest::Approx(4.97527).epsilon(1e-4));

    const double bounds[3] = {2.0, 0.5, 3.0};
    REQUIRE(specnorm_chain_bound(bounds, 3, 0, &out) == SPECNORM_OK);
    CHECK(out == doctest::Approx(3.0).epsilon(1e-12));
    REQUIRE(specnorm_chain_bound(bounds, 3, 1, &out) == SPECNORM_OK);
    CHECK(out == doctest::Approx(std::log(3.0)).epsilon(1e-12));

    const double negative[1] = {-1.0};
    CHECK(specnorm_chain_bound(negative, 1, 0, &out) == SPECNORM_ERR_USAGE);
}

TEST_CASE("the study entry returns a CSV table") {
    const int64_t sizes[1] = {7};
    const int64_t kernel[2] = {3, 3};
    char *out = nullptr;
    REQUIRE(specnorm_run_study(sizes, 1, 10, 3, kernel, 2, 8,
                               SPECNORM_STUDY_ORACLE_SINGLE_SIDED, 1,
                               SPECNORM_FORMAT_CSV, &out) == SPECNORM_OK);
    REQUIRE(out != nullptr);
    const std::string table(out);
    specnorm_string_free(out);
    CHECK(table.rfind("size,trials,median,q1,q3,seed\n", 0) == 0);
    CHECK(table.find("7,10,") != std::string::npos);
}

TEST_CASE("the normalize entry rewrites bundles on disk") {
    const fs::path dir =
        fs::temp_directory_path() / "specnorm-capi-normalize";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path in = dir / "in.txt";
    const fs::path outp = dir / "out" / "bundle.txt";

    specnorm::KernelBundle bundle;
    specnorm::LayerRecord pw;
    pw.name = "p";
    pw.kind = specnorm::LayerKind::pointwise;
    specnorm::DenseMatrix m = specnorm::DenseMatrix::zeros(1, 1);
    m.at(0, 0) = 4.0;
    pw.payload = specnorm::ConnectivityMatrix::validate(std::move(m));
    bundle.layers.push_back(std::move(pw));
    specnorm::write_bundle(bundle, in.string());

    char *out = nullptr;
    REQUIRE(specnorm_run_normalize(in.string().c_str(), outp.string().c_str(),
                                   1e-8, SPECNORM_FORMAT_CSV, &out) ==
            SPECNORM_OK);
    REQUIRE(out != nullptr);
    const std::string table(out);
    specnorm_string_free(out);
    CHECK(table.find("p,pointwise,power-method,4,") != std::string::npos);

    const specnorm::KernelBundle result =
        specnorm::read_bundle(outp.string());
    CHECK(result.layers[0].connectivity().at(0, 0) ==
          doctest::Approx(1.0).epsilon(1e-8));

    char *report = nullptr;
    REQUIRE(specnorm_run_report(outp.string().c_str(), 0, 0, 1e-6, 0,
                                SPECNORM_FORMAT_CSV, &report) == SPECNORM_OK);
    const std::string rtable(report);
    specnorm_string_free(report);
    CHECK(rtable.rfind("layer,kind,bound,method,guaranteed,oracle,ratio\n", 0) ==
          0);

    CHECK(specnorm_run_normalize((dir / "missing.txt").string().c_str(),
                                 outp.string().c_str(), 1e-8,
                                 SPECNORM_FORMAT_CSV, &out) ==
          SPECNORM_ERR_DATA);
    CHECK(specnorm_last_error_code() == SPECNORM_ERROR_BUNDLE_PARSE);
}

TEST_CASE("the bench entry runs the synthetic layers") {
    char *out = nullptr;
    /* Repetition floor guard only; the full synthetic bench is exercised
     * in the acceptance suite. */
    CHECK(specnorm_run_bench(nullptr, 1, 0.01, 0, SPECNORM_FORMAT_CSV, &out) ==
          SPECNORM_ERR_USAGE);
}

} // TEST_SUITE
