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

#ifndef SPECNORM_TESTS_HELPERS_HPP
#define SPECNORM_TESTS_HELPERS_HPP

#include <cstdint>
#include <vector>

#include "specnorm/model.hpp"
#include "specnorm/oracle.hpp"
#include "specnorm/rng.hpp"
#include "specnorm/types.hpp"

namespace specnorm::testing {

inline Tensor random_tensor(const Extents &shape, std::uint64_t seed,
                            std::uint64_t stream = 9000) {
    rng::PhiloxStream draws(seed, stream);
    Tensor out = Tensor::zeros(shape);
    for (auto &v : out.values)
        v = draws.next_gaussian();
    return out;
}

inline double svd_norm(const oracle::DenseOperator &op) {
    return oracle::exact_norm_svd(op).value;
}

inline FeatureGeometry unit_zero_geometry(const FilterBank &bank,
                                          const Extents &spatial) {
    FeatureGeometry g;
    g.spatial = spatial;
    g.pad = bank.pad();
    g.stride.assign(spatial.size(), 1);
    g.padding_mode = PaddingMode::zero;
    return g;
}

inline FeatureGeometry circulant_geometry(const Extents &spatial) {
    FeatureGeometry g;
    g.spatial = spatial;
    g.pad.assign(spatial.size(), 0);
    g.stride.assign(spatial.size(), 1);
    g.padding_mode = PaddingMode::circulant;
    return g;
}

/* Highest zero-padded operator norm across the bank's channels; the
 * per-channel blocks are independent, so the maximum is the bank norm. */
inline double bank_oracle_norm(const FilterBank &bank, const Extents &spatial) {
    double best = 0.0;
    for (std::int64_t c = 0; c < bank.channels(); ++c) {
        FeatureGeometry g = unit_zero_geometry(bank, spatial);
        const double v =
            svd_norm(oracle::materialize_zero_padded(bank.filter(c), g));
        best = v > best ? v : best;
    }
    return best;
}

} // namespace specnorm::testing

#endif
