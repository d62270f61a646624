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

#include "specnorm/normalize.hpp"

#include <cmath>

#include "specnorm/dft.hpp"

namespace specnorm {

const char *to_string(LayerKind kind) {
    switch (kind) {
    case LayerKind::depthwise: return "depthwise";
    case LayerKind::pointwise: return "pointwise";
    case LayerKind::dense: return "dense";
    }
    return "unknown";
}

namespace {

FeatureGeometry unit_stride_zero_geometry(const LayerRecord &layer) {
    if (!layer.geometry)
        throw Error(ErrorCode::usage_error,
                    "depthwise layer is missing its geometry");
    FeatureGeometry geometry = *layer.geometry;
    geometry.padding_mode = PaddingMode::zero;
    geometry.pad = layer.bank().pad();
    geometry.stride.assign(geometry.spatial.size(), 1);
    return geometry;
}

void scale_payload(LayerRecord &layer, double factor) {
    if (std::holds_alternative<FilterBank>(layer.payload)) {
        layer.payload = layer.bank().scaled(factor);
    } else if (std::holds_alternative<ConnectivityMatrix>(layer.payload)) {
        layer.payload = layer.connectivity().scaled(factor);
    } else {
        DenseMatrix m = layer.dense();
        for (double &v : m.values)
            v *= factor;
        layer.payload = std::move(m);
    }
}

} // namespace

NormEstimate estimate_layer_norm(LayerRecord &layer,
                                 const power::PowerConfig &config) {
    switch (layer.kind) {
    case LayerKind::depthwise:
        return dft::depthwise_spectral_bound(layer.bank(),
                                             unit_stride_zero_geometry(layer));
    case LayerKind::pointwise: {
        const power::WarmStartState *warm =
            layer.warm ? &*layer.warm : nullptr;
        power::PowerResult result =
            power::connectivity_spectral_norm(layer.connectivity(), config, warm);
        layer.warm = std::move(result.state);
        return result.estimate;
    }
    case LayerKind::dense: {
        const power::WarmStartState *warm =
            layer.warm ? &*layer.warm : nullptr;
        power::PowerResult result = power::power_iterate(
            power::matrix_operator(layer.dense()), config, warm);
        layer.warm = std::move(result.state);
        return result.estimate;
    }
    }
    throw Error(ErrorCode::usage_error, "unknown layer kind");
}

NormalizeOutcome spectral_normalize(const LayerRecord &layer,
                                    const power::PowerConfig &config) {
    NormalizeOutcome outcome{layer, NormEstimate{}};
    outcome.estimate = estimate_layer_norm(outcome.layer, config);
    if (outcome.estimate.value == 0.0)
        throw Error(ErrorCode::zero_norm_kernel,
                    "layer '" + layer.name + "' has zero spectral norm");
    scale_payload(outcome.layer, 1.0 / outcome.estimate.value);
    return outcome;
}

double scaling_multiplier(const ScalingPolicy &policy) {
    if (policy.K <= 0.0)
        throw Error(ErrorCode::usage_error, "scaling constant K must be positive");
    if (policy.kind == ScalingKind::hard)
        return policy.K;
    return policy.K * std::tanh(policy.s);
}

EnforceOutcome enforce_lipschitz(const LayerRecord &layer,
                                 const power::PowerConfig &config) {
    if (!layer.policy)
        throw Error(ErrorCode::usage_error,
                    "layer has no scaling policy to enforce");
    NormalizeOutcome normalized = spectral_normalize(layer, config);

    EnforceOutcome outcome;
    outcome.layer = std::move(normalized.layer);
    outcome.post_estimate = estimate_layer_norm(outcome.layer, config);

    const double multiplier = scaling_multiplier(*layer.policy);
    scale_payload(outcome.layer, multiplier);
    outcome.effective_bound = std::abs(multiplier) *
                              outcome.post_estimate.value *
                              layer.activation_lip;
    return outcome;
}

double chain_lipschitz_bound(const std::vector<double> &bounds) {
    double product = 1.0;
    for (double b : bounds) {
        if (b < 0.0)
            throw Error(ErrorCode::usage_error,
                        "layer bounds must be non-negative");
        product *= b;
    }
    return product;
}

double chain_lipschitz_log_bound(const std::vector<double> &bounds) {
    double sum = 0.0;
    for (double b : bounds) {
        if (b < 0.0)
            throw Error(ErrorCode::usage_error,
                        "layer bounds must be non-negative");
        sum += std::log(b);
    }
    return sum;
}

} // namespace specnorm
