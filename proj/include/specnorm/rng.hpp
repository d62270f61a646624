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

#ifndef SPECNORM_RNG_HPP
#define SPECNORM_RNG_HPP

#include <array>
#include <cstdint>

namespace specnorm::rng {

/* Philox-4x32 block cipher with 10 rounds: maps a 128-bit counter and a
 * 64-bit key to 128 bits of output. Counter-based, so any block of the
 * stream can be generated independently of the others. */
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/* Deterministic random stream "philox4x32-10/normal/v1".
 *
 * Key     = 64-bit seed (low word first).
 * Counter = (block index, stream id), 64 bits each, low word first.
 *
 * Distinct (seed, stream) pairs yield statistically independent streams,
 * which makes per-trial generation order-independent under any thread
 * count. Uniforms take 53 random bits; Gaussians use the Box-Muller
 * transform on consecutive uniform pairs. */
class PhiloxStream {
  public:
    explicit PhiloxStream(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint32_t next_u32();
    std::uint64_t next_u64();

    /* Uniform on [0, 1) with 53-bit resolution. */
    double next_uniform();

    /* Standard normal draw, sigma = 1. */
    double next_gaussian();

  private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint32_t, 4> buffer_{};
    int cursor_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace specnorm::rng

#endif
