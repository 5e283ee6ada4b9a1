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

#ifndef QTDOA_HARNESS_HPP
#define QTDOA_HARNESS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qtdoa/core.hpp"
#include "qtdoa/noise.hpp"
#include "qtdoa/solver.hpp"

namespace qtdoa {

/// Full description of a Monte Carlo campaign. Defaults reproduce the
/// 16-anchor / 8-pair cubic testbed.
struct ExperimentConfig {
    double dx = 2.0;  // sensor cube half-width, meters
    double da = 1.0;  // anchor cube half-width, meters
    std::vector<Point> anchors;                 // within [-da, da]^3
    std::vector<std::pair<int, int>> pairs;     // 1-based anchor index pairs
    std::vector<double> eta_grid = {0.00, 0.01, 0.02, 0.03, 0.04};
    int trials = 2000;
    double delta = kDefaultDelta;
    std::vector<NoiseMode> modes = {NoiseMode::quantum_assisted, NoiseMode::classical};
    std::uint64_t master_seed = 20260825;
    bool weighted = false;
    double kappa = 1.0;  // phase model factor, rad/m
    SolverSettings solver;
    int threads = 0;  // 0 = hardware concurrency

    AnchorSet anchor_set() const;
    RangingScenario scenario() const;
    void validate() const;

    /// The default testbed: 16 fixed anchors, 8 mirror pairs, 3-D.
    static ExperimentConfig defaults();
};

/// One Monte Carlo trial row.
struct TrialRecord {
    int trial = 0;
    double eta = 0.0;
    NoiseMode mode = NoiseMode::quantum_assisted;
    Point x_true;
    Point x_hat;
    double error_m = 0.0;
    double bound_m = 0.0;  // NaN when unavailable (eta = 0 or ill-conditioned FIM)
    LocalizationStatus status = LocalizationStatus::numerical_failure;
    int iterations = 0;
    double seconds = 0.0;  // wall clock around the conic solve only
    bool skipped = false;  // degenerate-geometry resampling budget exhausted
};

/// Aggregated cell of the results table.
struct SummaryCell {
    double eta = 0.0;
    NoiseMode mode = NoiseMode::quantum_assisted;
    int trials = 0;
    int successes = 0;   // status == optimal
    int skipped = 0;
    double me = 0.0;          // mean error over successful trials; NaN if none
    double mean_bound = 0.0;  // mean Jensen bound over all trials with a bound; NaN if none
    double success_rate = 0.0;
    double mean_seconds = 0.0;
};

/// Uniform sensor draw in [-dx, dx]^3 keyed by (master_seed, trial).
/// Positions whose scenario has any |combined distance| < 1e-6 m are
/// resampled; nullopt after 100 attempts.
std::optional<Point> sample_sensor(const ExperimentConfig& config, int trial);

/// Runs every (eta, mode, trial) cell: sample sensor, generate the batch
/// under the mode's noise model, localize with the conic solver, attach the
/// per-geometry bound. Trials execute in parallel; record order is fixed by
/// (eta, mode, trial) regardless of schedule. Solver failures are recorded
/// per row and never abort the campaign.
std::vector<TrialRecord> run_campaign(const ExperimentConfig& config);

/// Per-(eta, mode) aggregation. ME averages successful trials; the bound
/// averages every trial with an available bound so that the bound column is
/// independent of solver outcomes.
std::vector<SummaryCell> summarize(const std::vector<TrialRecord>& records);

// --- persistence -------------------------------------------------------

/// Exact header of the records CSV.
extern const char* const kRecordsCsvHeader;

std::string records_to_csv(const std::vector<TrialRecord>& records);
void write_records_csv(const std::vector<TrialRecord>& records, const std::string& path);
std::vector<TrialRecord> read_records_csv(const std::string& path);

std::string summary_to_csv(const std::vector<SummaryCell>& cells);
void write_summary_csv(const std::vector<SummaryCell>& cells, const std::string& path);

/// Human-readable summary table (also printed by the CLI).
std::string format_summary(const std::vector<SummaryCell>& cells);

/// JSON configuration I/O. Required keys: "anchors", "pairs". All other
/// keys default as in ExperimentConfig::defaults(); unknown keys are
/// rejected with the offending key named.
ExperimentConfig read_config(const std::string& path);
void write_config(const ExperimentConfig& config, const std::string& path);

}  // namespace qtdoa

#endif  // QTDOA_HARNESS_HPP
