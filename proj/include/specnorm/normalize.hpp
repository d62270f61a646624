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

#ifndef SPECNORM_NORMALIZE_HPP
#define SPECNORM_NORMALIZE_HPP

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "specnorm/model.hpp"
#include "specnorm/power.hpp"
#include "specnorm/types.hpp"

namespace specnorm {

enum class LayerKind { depthwise, pointwise, dense };

const char *to_string(LayerKind kind);

struct LayerRecord {
    std::string name;
    LayerKind kind = LayerKind::depthwise;
    std::variant<std::monostate, FilterBank, ConnectivityMatrix, DenseMatrix>
        payload;
    std::optional<FeatureGeometry> geometry;
    std::optional<power::WarmStartState> warm;
    std::optional<ScalingPolicy> policy;
    double activation_lip = 1.0;
    /* Bias blob carried through untouched by normalization. */
    std::vector<float> bias;

    const FilterBank &bank() const { return std::get<FilterBank>(payload); }
    const ConnectivityMatrix &connectivity() const {
        return std::get<ConnectivityMatrix>(payload);
    }
    const DenseMatrix &dense() const { return std::get<DenseMatrix>(payload); }
};

/* Norm of the layer's linear part: the guaranteed unit-stride bound for
 * depthwise layers (valid for any stride), the tap-matrix power method
 * for pointwise layers, the plain matrix power method for dense layers.
 * Updates the record's warm state where one applies. */
NormEstimate estimate_layer_norm(LayerRecord &layer,
                                 const power::PowerConfig &config);

struct NormalizeOutcome {
    LayerRecord layer;
    NormEstimate estimate;
};

/* Divides the payload entrywise by the layer's norm estimate. Biases are
 * untouched. Throws zero_norm_kernel when the estimate vanishes. */
NormalizeOutcome spectral_normalize(const LayerRecord &layer,
                                    const power::PowerConfig &config);

/* hard -> K; soft -> K * tanh(s), strictly inside (-K, K). */
double scaling_multiplier(const ScalingPolicy &policy);

struct EnforceOutcome {
    LayerRecord layer;
    double effective_bound = 0.0;
    NormEstimate post_estimate;
};

/* spectral_normalize, then multiply by the policy's scaling. The bound is
 * |multiplier| * (recomputed post-normalization estimate) * activation_lip. */
EnforceOutcome enforce_lipschitz(const LayerRecord &layer,
                                 const power::PowerConfig &config);

/* Product of per-layer effective bounds. */
double chain_lipschitz_bound(const std::vector<double> &bounds);

/* Same composition in log space: sum of log bounds, immune to overflow. */
double chain_lipschitz_log_bound(const std::vector<double> &bounds);

} // namespace specnorm

#endif
