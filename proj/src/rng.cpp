// Copyright 2026 The qtdoa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qtdoa/rng.hpp"

#include <cmath>

namespace qtdoa::rng {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t absorb(std::uint64_t state, std::uint64_t v) {
    state ^= v + kGolden + (state << 12) + (state >> 4);
    return state;
}

/// SplitMix64 step: advances the state and returns one output word.
std::uint64_t next(std::uint64_t& state) {
    state += kGolden;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double to_unit(std::uint64_t word) {
    // 53 high bits -> [0, 1)
    return static_cast<double>(word >> 11) * 0x1.0p-53;
}

}  // namespace

std::uint64_t mix64(std::uint64_t v) {
    v = (v ^ (v >> 30)) * 0xBF58476D1CE4E5B9ull;
    v = (v ^ (v >> 27)) * 0x94D049BB133111EBull;
    return v ^ (v >> 31);
}

std::uint64_t derive_key(std::uint64_t seed, Stream stream, std::uint64_t a,
                         std::uint64_t b, std::uint64_t c) {
    std::uint64_t state = mix64(seed + kGolden);
    state = mix64(absorb(state, static_cast<std::uint64_t>(stream)));
    state = mix64(absorb(state, a));
    state = mix64(absorb(state, b));
    state = mix64(absorb(state, c));
    return state;
}

double uniform01(std::uint64_t key, std::uint64_t ctr) {
    std::uint64_t state = key + ctr * kGolden;
    return to_unit(next(state));
}

double standard_normal(std::uint64_t key, std::uint64_t ctr) {
    std::uint64_t state = key + ctr * kGolden;
    const double u1 = 1.0 - to_unit(next(state));  // (0, 1], keeps log finite
    const double u2 = to_unit(next(state));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace qtdoa::rng
