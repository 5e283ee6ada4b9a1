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

#include "qtdoa/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qtdoa {

PhaseModel PhaseModel::from_constants(double e0, double e1, double hbar, double c) {
    if (!(hbar > 0.0) || !(c > 0.0)) {
        throw ValidationError("hbar and c must be positive");
    }
    PhaseModel model;
    model.kappa = 2.0 * (e1 - e0) / (hbar * c);
    model.validate();
    return model;
}

void PhaseModel::validate() const {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
        throw ValidationError("phase factor kappa must be positive and finite");
    }
}

void ShotRecord::validate() const {
    if (shots < 1) {
        throw ValidationError("shot count must be >= 1");
    }
    if (zeros < 0 || zeros > shots) {
        throw ValidationError("zero-outcome count out of [0, N]");
    }
}

double phase_from_distance(double distance_m, const PhaseModel& model) {
    model.validate();
    if (!std::isfinite(distance_m)) {
        throw ValidationError("distance must be finite");
    }
    return model.kappa * distance_m;
}

std::pair<double, double> outcome_probability(double theta) {
    if (!std::isfinite(theta)) {
        throw ValidationError("phase must be finite");
    }
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    return {c * c, s * s};
}

ShotRecord sample_shots(double theta, std::int64_t shots, std::mt19937_64& rng) {
    if (shots < 1) {
        throw ValidationError("shot count must be >= 1");
    }
    const double p0 = outcome_probability(theta).first;
    std::int64_t zeros = 0;
    for (std::int64_t i = 0; i < shots; ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        if (u < p0) ++zeros;
    }
    return ShotRecord{shots, zeros};
}

double estimate_phase(const ShotRecord& record) {
    record.validate();
    return estimate_phase(static_cast<double>(record.zeros) / static_cast<double>(record.shots));
}

double estimate_phase(double zero_fraction) {
    if (!(zero_fraction >= 0.0 && zero_fraction <= 1.0)) {
        throw ValidationError("zero-outcome fraction must lie in [0, 1]");
    }
    return 2.0 * std::acos(std::sqrt(zero_fraction));
}

double decode_distance(double theta_hat, const PhaseModel& model) {
    model.validate();
    return theta_hat / model.kappa;
}

}  // namespace qtdoa
