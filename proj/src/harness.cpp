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

#include "specnorm/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "specnorm/dft.hpp"
#include "specnorm/power.hpp"
#include "specnorm/rng.hpp"

namespace specnorm::harness {

namespace {

std::string fmt_real(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

/* Linear-interpolation quantile on a sorted sample. */
double quantile_sorted(const std::vector<double> &sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 1)
        return sorted[0];
    const double h = static_cast<double>(n - 1) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= n)
        return sorted[n - 1];
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

void run_pool(std::int64_t count, int threads,
              const std::function<void(std::int64_t)> &work) {
    int workers = threads > 0
                      ? threads
                      : static_cast<int>(std::thread::hardware_concurrency());
    if (workers < 1)
        workers = 1;
    workers = static_cast<int>(
        std::min<std::int64_t>(workers, std::max<std::int64_t>(count, 1)));
    if (workers == 1) {
        for (std::int64_t i = 0; i < count; ++i)
            work(i);
        return;
    }
    std::atomic<std::int64_t> next(0);
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= count)
                    return;
                try {
                    work(i);
                } catch (...) {
                    std::lock_guard<std::mutex> guard(failure_mutex);
                    if (!failure)
                        failure = std::current_exception();
                    return;
                }
            }
        });
    }
    for (std::thread &t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace

Extents parse_kernel_spec(const std::string &spec) {
    Extents out;
    std::string token;
    for (char c : spec + "x") {
        if (c == 'x' || c == ',') {
            if (token.empty())
                throw Error(ErrorCode::usage_error,
                            "malformed kernel spec '" + spec + "'");
            try {
                std::size_t used = 0;
                const std::int64_t extent = std::stoll(token, &used);
                if (used != token.size() || extent < 1)
                    throw std::invalid_argument(token);
                out.push_back(extent);
            } catch (const std::exception &) {
                throw Error(ErrorCode::usage_error,
                            "malformed kernel spec '" + spec + "'");
            }
            token.clear();
        } else {
            token.push_back(c);
        }
    }
    if (out.empty() || out.size() > 3)
        throw Error(ErrorCode::usage_error,
                    "kernel spec must have 1 to 3 extents");
    return out;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    const std::array<std::uint32_t, 4> block = rng::philox4x32_10(
        {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
         static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)},
        {static_cast<std::uint32_t>(seed),
         static_cast<std::uint32_t>(seed >> 32)});
    return (static_cast<std::uint64_t>(block[1]) << 32) | block[0];
}

std::vector<StudyRow> run_study(const StudyConfig &config) {
    if (config.trials < 1)
        throw Error(ErrorCode::usage_error, "trials must be positive");
    if (config.oracle_iters < 1)
        throw Error(ErrorCode::usage_error, "oracle-iters must be positive");
    if (config.sizes.empty())
        throw Error(ErrorCode::usage_error, "at least one size is required");
    for (std::int64_t extent : config.kernel)
        if (extent < 1 || extent % 2 == 0)
            throw Error(ErrorCode::even_kernel_extent,
                        "kernel extents must be odd (2p+1)");
    const std::size_t d = config.kernel.size();
    for (std::int64_t size : config.sizes)
        for (std::int64_t extent : config.kernel)
            if (size < extent)
                throw Error(ErrorCode::target_too_small,
                            "size " + std::to_string(size) +
                                " is smaller than the kernel");

    std::vector<StudyRow> rows;
    for (std::size_t si = 0; si < config.sizes.size(); ++si) {
        const std::int64_t size = config.sizes[si];
        FeatureGeometry geometry;
        geometry.spatial.assign(d, size);
        geometry.pad.resize(d);
        for (std::size_t a = 0; a < d; ++a)
            geometry.pad[a] = (config.kernel[a] - 1) / 2;
        geometry.stride.assign(d, 1);
        geometry.padding_mode = PaddingMode::zero;

        std::vector<double> ratios(static_cast<std::size_t>(config.trials));
        run_pool(config.trials, config.threads, [&](std::int64_t trial) {
            const std::uint64_t trial_seed = derive_seed(
                config.seed, static_cast<std::uint64_t>(size),
                static_cast<std::uint64_t>(trial));
            const FilterBank bank =
                random_gaussian_filters(1, config.kernel, trial_seed);
            const double bound =
                dft::depthwise_spectral_bound(bank, geometry).value;
            const power::LinearOperator op =
                power::depthwise_zero_padded_operator(bank, geometry);
            double oracle = 0.0;
            if (config.oracle == StudyOracle::single_sided) {
                oracle = power::plain_power_norm(op, config.oracle_iters,
                                                 trial_seed)
                             .value;
            } else {
                power::PowerConfig pc;
                pc.seed = trial_seed;
                pc.max_iterations = config.oracle_iters;
                oracle =
                    power::power_iterate_fixed(op, config.oracle_iters, pc)
                        .estimate.value;
            }
            if (oracle == 0.0)
                throw Error(ErrorCode::zero_vector,
                            "study oracle returned a zero norm");
            ratios[static_cast<std::size_t>(trial)] = bound / oracle;
        });

        std::vector<double> sorted = ratios;
        std::sort(sorted.begin(), sorted.end());
        StudyRow row;
        row.size = size;
        row.trials = config.trials;
        row.median = quantile_sorted(sorted, 0.5);
        row.q1 = quantile_sorted(sorted, 0.25);
        row.q3 = quantile_sorted(sorted, 0.75);
        row.seed = config.seed;
        rows.push_back(row);
    }
    return rows;
}

std::string study_table(const std::vector<StudyRow> &rows, OutputFormat format) {
    if (format == OutputFormat::csv) {
        std::string out = "size,trials,median,q1,q3,seed\n";
        for (const StudyRow &r : rows) {
            out += std::to_string(r.size) + "," + std::to_string(r.trials) +
                   "," + fmt_real(r.median) + "," + fmt_real(r.q1) + "," +
                   fmt_real(r.q3) + "," + std::to_string(r.seed) + "\n";
        }
        return out;
    }
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const StudyRow &r : rows) {
        doc.push_back({{"size", r.size},
                       {"trials", r.trials},
                       {"median", r.median},
                       {"q1", r.q1},
                       {"q3", r.q3},
                       {"seed", r.seed}});
    }
    return doc.dump() + "\n";
}

KernelBundle default_bench_bundle(std::uint64_t seed) {
    KernelBundle bundle;

    LayerRecord depthwise;
    depthwise.name = "depthwise-32x64";
    depthwise.kind = LayerKind::depthwise;
    depthwise.payload =
        random_gaussian_filters(32, {3, 3}, derive_seed(seed, 100, 0));
    FeatureGeometry geometry;
    geometry.spatial = {64, 64};
    geometry.pad = {1, 1};
    geometry.stride = {1, 1};
    geometry.padding_mode = PaddingMode::zero;
    depthwise.geometry = geometry;
    bundle.layers.push_back(std::move(depthwise));

    LayerRecord pointwise;
    pointwise.name = "pointwise-64x128";
    pointwise.kind = LayerKind::pointwise;
    pointwise.payload = random_gaussian_matrix(64, 128, derive_seed(seed, 101, 0));
    FeatureGeometry pw_geometry;
    pw_geometry.spatial = {56, 56};
    pw_geometry.pad = {0, 0};
    pw_geometry.stride = {1, 1};
    pw_geometry.padding_mode = PaddingMode::zero;
    pointwise.geometry = pw_geometry;
    bundle.layers.push_back(std::move(pointwise));

    LayerRecord dense;
    dense.name = "dense-64x64";
    dense.kind = LayerKind::dense;
    DenseMatrix matrix = DenseMatrix::zeros(64, 64);
    rng::PhiloxStream stream(derive_seed(seed, 102, 0), 0);
    for (double &v : matrix.values)
        v = stream.next_gaussian();
    dense.payload = std::move(matrix);
    bundle.layers.push_back(std::move(dense));

    return bundle;
}

namespace {

struct Measurement {
    std::int64_t median_ns = 0;
    std::int64_t iterations = 0;
};

Measurement measure(std::int64_t repetitions,
                    const std::function<std::int64_t()> &body) {
    std::vector<std::int64_t> times;
    std::int64_t iterations = 0;
    for (std::int64_t rep = 0; rep < repetitions; ++rep) {
        const auto start = std::chrono::steady_clock::now();
        iterations = body();
        const auto stop = std::chrono::steady_clock::now();
        times.push_back(
            std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start)
                .count());
    }
    std::sort(times.begin(), times.end());
    return {times[times.size() / 2], iterations};
}

/* Time one power_iterate call; a budget-capped run is still a valid
 * timing sample, so the estimate inside the error payload is accepted. */
std::int64_t timed_power(const power::LinearOperator &op,
                         const power::PowerConfig &config,
                         const power::WarmStartState *warm) {
    try {
        return power::power_iterate(op, config, warm).estimate.iterations;
    } catch (const power::NonConvergenceError &error) {
        return error.estimate.iterations;
    }
}

} // namespace

std::vector<BenchRow> run_bench(const KernelBundle &bundle,
                                const BenchConfig &config) {
    if (config.repetitions < 3)
        throw Error(ErrorCode::usage_error, "repetitions must be at least 3");

    std::vector<BenchRow> rows;
    for (const LayerRecord &layer : bundle.layers) {
        power::PowerConfig pc;
        pc.epsilon = config.epsilon;
        pc.seed = derive_seed(config.seed, 200, rows.size());

        if (layer.kind == LayerKind::depthwise) {
            if (!layer.geometry)
                throw Error(ErrorCode::usage_error,
                            "depthwise layer '" + layer.name +
                                "' is missing its geometry");
            FeatureGeometry geometry = *layer.geometry;
            geometry.stride.assign(geometry.spatial.size(), 1);
            const FilterBank &bank = layer.bank();

            Measurement m = measure(config.repetitions, [&]() {
                (void)dft::depthwise_spectral_bound(bank, geometry);
                return std::int64_t{0};
            });
            rows.push_back({layer.name, "dft-bound", m.median_ns, 0});

            const power::LinearOperator op =
                power::depthwise_zero_padded_operator(bank, geometry);
            m = measure(config.repetitions,
                        [&]() { return timed_power(op, pc, nullptr); });
            rows.push_back({layer.name, "power-cold", m.median_ns, m.iterations});

            power::WarmStartState warm;
            try {
                warm = power::power_iterate(op, pc).state;
            } catch (const power::NonConvergenceError &error) {
                warm = error.state;
            }
            m = measure(config.repetitions,
                        [&]() { return timed_power(op, pc, &warm); });
            rows.push_back({layer.name, "power-warm", m.median_ns, m.iterations});
        } else if (layer.kind == LayerKind::pointwise) {
            const ConnectivityMatrix &theta = layer.connectivity();
            Measurement m = measure(config.repetitions, [&]() {
                return power::connectivity_spectral_norm(theta, pc)
                    .estimate.iterations;
            });
            rows.push_back(
                {layer.name, "connectivity-power", m.median_ns, m.iterations});

            if (layer.geometry) {
                const power::LinearOperator naive =
                    power::pointwise_operator(theta, layer.geometry->spatial);
                m = measure(config.repetitions,
                            [&]() { return timed_power(naive, pc, nullptr); });
                rows.push_back(
                    {layer.name, "power-cold", m.median_ns, m.iterations});
            }
        } else {
            const power::LinearOperator op =
                power::matrix_operator(layer.dense());
            Measurement m = measure(config.repetitions,
                                    [&]() { return timed_power(op, pc, nullptr); });
            rows.push_back({layer.name, "power-cold", m.median_ns, m.iterations});

            power::WarmStartState warm;
            try {
                warm = power::power_iterate(op, pc).state;
            } catch (const power::NonConvergenceError &error) {
                warm = error.state;
            }
            m = measure(config.repetitions,
                        [&]() { return timed_power(op, pc, &warm); });
            rows.push_back({layer.name, "power-warm", m.median_ns, m.iterations});
        }
    }
    return rows;
}

std::string bench_table(const std::vector<BenchRow> &rows, OutputFormat format) {
    if (format == OutputFormat::csv) {
        std::string out = "layer,method,median_ns,iterations\n";
        for (const BenchRow &r : rows)
            out += r.layer + "," + r.method + "," + std::to_string(r.median_ns) +
                   "," + std::to_string(r.iterations) + "\n";
        return out;
    }
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const BenchRow &r : rows)
        doc.push_back({{"layer", r.layer},
                       {"method", r.method},
                       {"median_ns", r.median_ns},
                       {"iterations", r.iterations}});
    return doc.dump() + "\n";
}

std::vector<NormalizeRow> run_normalize(const std::string &in_path,
                                        const std::string &out_path,
                                        double epsilon) {
    if (epsilon <= 0.0)
        throw Error(ErrorCode::usage_error, "epsilon must be positive");
    KernelBundle bundle = read_bundle(in_path);

    power::PowerConfig config;
    config.epsilon = epsilon;

    std::vector<NormalizeRow> rows;
    KernelBundle out;
    out.version = bundle.version;
    for (LayerRecord &layer : bundle.layers) {
        /* The reported estimate is the pre-normalization norm. */
        NormalizeOutcome normalized = spectral_normalize(layer, config);
        NormalizeRow row;
        row.layer = layer.name;
        row.kind = to_string(layer.kind);
        row.value = normalized.estimate.value;
        row.method = to_string(normalized.estimate.method);
        row.iterations = normalized.estimate.iterations;
        row.residual = normalized.estimate.residual;

        LayerRecord result = std::move(normalized.layer);
        if (layer.policy) {
            const double multiplier = scaling_multiplier(*layer.policy);
            if (result.kind == LayerKind::depthwise)
                result.payload = result.bank().scaled(multiplier);
            else if (result.kind == LayerKind::pointwise)
                result.payload = result.connectivity().scaled(multiplier);
            else {
                DenseMatrix m = result.dense();
                for (double &v : m.values)
                    v *= multiplier;
                result.payload = std::move(m);
            }
        }
        out.layers.push_back(std::move(result));
        rows.push_back(std::move(row));
    }
    write_bundle(out, out_path);
    return rows;
}

std::string normalize_table(const std::vector<NormalizeRow> &rows,
                            OutputFormat format) {
    if (format == OutputFormat::csv) {
        std::string out = "layer,kind,method,value,iterations,residual\n";
        for (const NormalizeRow &r : rows)
            out += r.layer + "," + r.kind + "," + r.method + "," +
                   fmt_real(r.value) + "," + std::to_string(r.iterations) + "," +
                   fmt_real(r.residual) + "\n";
        return out;
    }
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const NormalizeRow &r : rows)
        doc.push_back({{"layer", r.layer},
                       {"kind", r.kind},
                       {"method", r.method},
                       {"value", r.value},
                       {"iterations", r.iterations},
                       {"residual", r.residual}});
    return doc.dump() + "\n";
}

std::vector<ReportRow> run_report(const std::string &in_path,
                                  const ReportConfig &config) {
    KernelBundle bundle = read_bundle(in_path);

    power::PowerConfig pc;
    pc.epsilon = config.epsilon;

    std::vector<ReportRow> rows;
    for (LayerRecord &layer : bundle.layers) {
        ReportRow row;
        row.layer = layer.name;
        row.kind = to_string(layer.kind);
        pc.seed = derive_seed(config.seed, 300, rows.size());

        if (layer.kind == LayerKind::depthwise) {
            FeatureGeometry geometry = *layer.geometry;
            FeatureGeometry unit = geometry;
            unit.stride.assign(unit.spatial.size(), 1);
            const NormEstimate bound =
                dft::depthwise_spectral_bound(layer.bank(), unit);
            const NormEstimate adjusted = dft::stride_adjusted_estimate(
                bound, geometry.stride, config.heuristic_stride);
            row.bound = adjusted.value;
            row.method = to_string(adjusted.method);
            row.guaranteed = adjusted.is_upper_bound;

            if (config.oracle_iters > 0 && geometry.unit_stride()) {
                const power::LinearOperator op =
                    power::depthwise_zero_padded_operator(layer.bank(), unit);
                const NormEstimate oracle = power::plain_power_norm(
                    op, config.oracle_iters, pc.seed);
                row.has_oracle = true;
                row.oracle = oracle.value;
                row.ratio = row.bound / oracle.value;
            }
        } else {
            const NormEstimate estimate = estimate_layer_norm(layer, pc);
            row.bound = estimate.value;
            row.method = to_string(estimate.method);
            row.guaranteed = estimate.is_upper_bound;
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string report_table(const std::vector<ReportRow> &rows,
                         OutputFormat format) {
    if (format == OutputFormat::csv) {
        std::string out = "layer,kind,bound,method,guaranteed,oracle,ratio\n";
        for (const ReportRow &r : rows) {
            out += r.layer + "," + r.kind + "," + fmt_real(r.bound) + "," +
                   r.method + "," + (r.guaranteed ? "true" : "false") + ",";
            if (r.has_oracle)
                out += fmt_real(r.oracle) + "," + fmt_real(r.ratio);
            else
                out += ",";
            out += "\n";
        }
        return out;
    }
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const ReportRow &r : rows) {
        nlohmann::ordered_json item = {{"layer", r.layer},
                                       {"kind", r.kind},
                                       {"bound", r.bound},
                                       {"method", r.method},
                                       {"guaranteed", r.guaranteed}};
        if (r.has_oracle) {
            item["oracle"] = r.oracle;
            item["ratio"] = r.ratio;
        }
        doc.push_back(std::move(item));
    }
    return doc.dump() + "\n";
}

} // namespace specnorm::harness
