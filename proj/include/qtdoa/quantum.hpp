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

#ifndef QTDOA_QUANTUM_HPP
#define QTDOA_QUANTUM_HPP

#include <cstdint>
#include <random>
#include <utility>

#include "qtdoa/errors.hpp"

namespace qtdoa {

// Two-branch probe-state model of quantum-assisted ranging. The relative
// phase between the branches grows linearly with the signed combined
// distance; a binary projective measurement exposes it through
// p0 = cos^2(theta/2). The unobservable global phase is not represented.
//
// Validity domain of the decode path: kappa * |D| in [0, pi). Phase
// wrapping and sign recovery beyond it are out of scope; the Monte Carlo
// pipeline models phase-estimation error through the noise module instead.

/// Phase-per-distance factor of the ranging probe.
struct PhaseModel {
    /// Radians accumulated per meter of signed combined distance.
    double kappa = 1.0;

    /// Builds the model from physical constants: branch energies (J),
    /// reduced Planck constant (J s) and propagation speed (m/s). The
    /// factor 2 accounts for the out-and-back flight.
    static PhaseModel from_constants(double e0, double e1, double hbar, double c);

    void validate() const;
};

/// Outcome counts of repeated binary measurements.
struct ShotRecord {
    std::int64_t shots = 0;  // N >= 1
    std::int64_t zeros = 0;  // count of the Pi_0 outcome, in [0, N]

    void validate() const;
};

/// theta = kappa * D. D may be negative for TDoA combinations.
double phase_from_distance(double distance_m, const PhaseModel& model);

/// (p0, p1) = (cos^2(theta/2), sin^2(theta/2)).
std::pair<double, double> outcome_probability(double theta);

/// Draws N binary outcomes at the given phase. Binomial by explicit
/// counting; deterministic for a fixed engine state.
ShotRecord sample_shots(double theta, std::int64_t shots, std::mt19937_64& rng);

/// theta_hat = 2 acos(sqrt(zeros / shots)), in [0, pi].
double estimate_phase(const ShotRecord& record);

/// Same inversion applied to an exact zero-outcome fraction in [0, 1].
double estimate_phase(double zero_fraction);

/// D_hat = theta_hat / kappa, meters.
double decode_distance(double theta_hat, const PhaseModel& model);

}  // namespace qtdoa

#endif  // QTDOA_QUANTUM_HPP
