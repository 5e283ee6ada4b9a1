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

#ifndef QTDOA_RNG_HPP
#define QTDOA_RNG_HPP

#include <cstdint>

namespace qtdoa::rng {

// Counter-based randomness: every draw is a pure function of a key built from
// (seed, stream, indices). Draws are reproducible bit-for-bit regardless of
// evaluation order or thread schedule.

/// Disjoint stream identifiers so unrelated consumers of the same master seed
/// never collide.
enum class Stream : std::uint64_t {
    sensor = 1,  // sensor position sampling (harness)
    noise = 2,   // measurement noise draws
    start = 3,   // multi-start initial guesses
};

/// SplitMix64 finalizer; bijective 64-bit mix.
std::uint64_t mix64(std::uint64_t v);

/// Derives a draw key from a seed, a stream id and up to three indices.
std::uint64_t derive_key(std::uint64_t seed, Stream stream, std::uint64_t a = 0,
                         std::uint64_t b = 0, std::uint64_t c = 0);

/// Uniform double in [0, 1), the `ctr`-th value of the stream at `key`.
double uniform01(std::uint64_t key, std::uint64_t ctr = 0);

/// Standard normal via Box-Muller on two uniforms of the keyed stream.
double standard_normal(std::uint64_t key, std::uint64_t ctr = 0);

}  // namespace qtdoa::rng

#endif  // QTDOA_RNG_HPP
