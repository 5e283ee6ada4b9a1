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

#ifndef QTDOA_NOISE_HPP
#define QTDOA_NOISE_HPP

#include <cstdint>
#include <string>

#include "qtdoa/core.hpp"

namespace qtdoa {

/// The two TDoA error models. Quantum-assisted ranging measures the distance
/// difference in one shot, so the relative error applies once to the
/// difference; classical ranging measures each leg separately and the two
/// leg errors superpose.
enum class NoiseMode {
    quantum_assisted,
    classical,
};

std::string to_string(NoiseMode mode);
NoiseMode noise_mode_from_string(const std::string& name);

/// Relative noise level and stream identity for one measurement batch.
/// Draws are keyed by (seed, trial, row, leg), so batches are reproducible
/// independent of evaluation order.
struct NoiseSpec {
    double eta = 0.0;  // relative noise level in [0, 1]
    NoiseMode mode = NoiseMode::quantum_assisted;
    std::uint64_t seed = 0;
    std::uint64_t trial = 0;

    void validate() const;
};

/// m noisy combined distances plus the exact values they perturb.
struct MeasurementBatch {
    Vector values;  // noisy d_k, meters
    Vector truth;   // exact combined distances, meters
    NoiseSpec spec;
};

/// d_k = truth_k * (1 + eta * eps_k), eps_k iid standard normal.
/// Requires spec.mode == quantum_assisted and a TDoA scenario.
MeasurementBatch measure_quantum(const Point& x, const AnchorSet& anchors,
                                 const RangingScenario& scenario, const NoiseSpec& spec);

/// d_k = ||x-a_i||(1 + eta eps_{k,1}) - ||x-a_j||(1 + eta eps_{k,2}),
/// eps_{k,v} iid standard normal. Requires spec.mode == classical and a
/// TDoA scenario.
MeasurementBatch measure_classical(const Point& x, const AnchorSet& anchors,
                                   const RangingScenario& scenario, const NoiseSpec& spec);

/// Dispatch on spec.mode.
MeasurementBatch measure(const Point& x, const AnchorSet& anchors,
                         const RangingScenario& scenario, const NoiseSpec& spec);

}  // namespace qtdoa

#endif  // QTDOA_NOISE_HPP
