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

#include "qtdoa/noise.hpp"

#include <cmath>

#include "qtdoa/rng.hpp"

namespace qtdoa {

namespace {

double row_draw(const NoiseSpec& spec, int row, int leg) {
    const std::uint64_t key =
        rng::derive_key(spec.seed, rng::Stream::noise, spec.trial,
                        static_cast<std::uint64_t>(row), static_cast<std::uint64_t>(leg));
    return rng::standard_normal(key);
}

void check_tdoa(const RangingScenario& scenario) {
    if (!scenario.all_tdoa()) {
        throw UnsupportedScenarioError("noise models require TDoA rows (two anchors, opposite signs)");
    }
}

}  // namespace

std::string to_string(NoiseMode mode) {
    return mode == NoiseMode::quantum_assisted ? "quantum" : "classical";
}

NoiseMode noise_mode_from_string(const std::string& name) {
    if (name == "quantum" || name == "quantum_assisted") return NoiseMode::quantum_assisted;
    if (name == "classical") return NoiseMode::classical;
    throw ValidationError("unknown noise mode '" + name + "' (expected quantum or classical)");
}

void NoiseSpec::validate() const {
    if (!(eta >= 0.0 && eta <= 1.0)) {
        throw ValidationError("noise level eta must lie in [0, 1]");
    }
}

MeasurementBatch measure_quantum(const Point& x, const AnchorSet& anchors,
                                 const RangingScenario& scenario, const NoiseSpec& spec) {
    spec.validate();
    if (spec.mode != NoiseMode::quantum_assisted) {
        throw ValidationError("measure_quantum requires mode = quantum_assisted");
    }
    check_tdoa(scenario);
    MeasurementBatch batch;
    batch.spec = spec;
    batch.truth = truth_vector(x, anchors, scenario);
    batch.values = batch.truth;
    // One-shot difference measurement: single relative error on the combination.
    for (int k = 0; k < batch.values.size(); ++k) {
        batch.values[k] = batch.truth[k] * (1.0 + spec.eta * row_draw(spec, k, 0));
    }
    return batch;
}

MeasurementBatch measure_classical(const Point& x, const AnchorSet& anchors,
                                   const RangingScenario& scenario, const NoiseSpec& spec) {
    spec.validate();
    if (spec.mode != NoiseMode::classical) {
        throw ValidationError("measure_classical requires mode = classical");
    }
    check_tdoa(scenario);
    MeasurementBatch batch;
    batch.spec = spec;
    batch.truth = truth_vector(x, anchors, scenario);
    batch.values.resize(batch.truth.size());
    for (int k = 0; k < batch.values.size(); ++k) {
        const RangingRow& row = scenario.rows[k];
        const double leg1 = (x - anchors[row.indices[0] - 1]).norm();
        const double leg2 = (x - anchors[row.indices[1] - 1]).norm();
        const double s1 = static_cast<double>(row.signs[0]);
        const double s2 = static_cast<double>(row.signs[1]);
        batch.values[k] = s1 * leg1 * (1.0 + spec.eta * row_draw(spec, k, 0)) +
                          s2 * leg2 * (1.0 + spec.eta * row_draw(spec, k, 1));
    }
    return batch;
}

MeasurementBatch measure(const Point& x, const AnchorSet& anchors,
                         const RangingScenario& scenario, const NoiseSpec& spec) {
    return spec.mode == NoiseMode::quantum_assisted ? measure_quantum(x, anchors, scenario, spec)
                                                    : measure_classical(x, anchors, scenario, spec);
}

}  // namespace qtdoa
