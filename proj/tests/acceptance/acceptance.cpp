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

// End-to-end release gate. Each criterion prints exactly one PASS/FAIL line
// with the measured quantities; the process exits nonzero if any requested
// criterion fails. Thresholds are pinned here, not configurable.

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "qtdoa/crlb.hpp"
#include "qtdoa/harness.hpp"
#include "qtdoa/quantum.hpp"
#include "support/oracles.hpp"

using namespace qtdoa;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* format, ...) {
    char buf[512];
    va_list args;
    va_start(args, format);
    std::vsnprintf(buf, sizeof(buf), format, args);
    va_end(args);
    return buf;
}

ExperimentConfig base_config(const std::string& config_path) {
    if (config_path.empty()) return ExperimentConfig::defaults();
    return read_config(config_path);
}

const SummaryCell* find_cell(const std::vector<SummaryCell>& cells, double eta,
                             NoiseMode mode) {
    for (const SummaryCell& cell : cells) {
        if (cell.eta == eta && cell.mode == mode) return &cell;
    }
    return nullptr;
}

/// Standard error of the mean error within one (eta, mode) cell.
double cell_stderr(const std::vector<TrialRecord>& records, double eta, NoiseMode mode) {
    std::vector<double> errs;
    for (const TrialRecord& rec : records) {
        if (rec.eta == eta && rec.mode == mode && !rec.skipped &&
            rec.status == LocalizationStatus::optimal) {
            errs.push_back(rec.error_m);
        }
    }
    if (errs.size() < 2) return std::numeric_limits<double>::infinity();
    const double var = testing::sample_variance(errs);
    return std::sqrt(var / static_cast<double>(errs.size()));
}

/// Drops the trailing wall-clock column from every CSV line.
std::string strip_timing(const std::string& csv) {
    std::string out, line;
    for (char c : csv) {
        if (c != '\n') {
            line += c;
            continue;
        }
        out += line.substr(0, line.rfind(','));
        out += '\n';
        line.clear();
    }
    return out;
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// --- criterion 1: quantum advantage ------------------------------------

Outcome criterion1(const std::string& config_path) {
    constexpr double kGainFloor = 0.30;
    constexpr int kTrials = 500;

    ExperimentConfig cfg = base_config(config_path);
    cfg.trials = kTrials;
    cfg.eta_grid = {0.01, 0.02, 0.03, 0.04};
    const std::vector<TrialRecord> records = run_campaign(cfg);
    const std::vector<SummaryCell> cells = summarize(records);

    bool ordered = true, monotone = true, healthy = true;
    double gain_sum = 0.0;
    std::vector<double> me_q, me_c;
    for (double eta : cfg.eta_grid) {
        const SummaryCell* q = find_cell(cells, eta, NoiseMode::quantum_assisted);
        const SummaryCell* c = find_cell(cells, eta, NoiseMode::classical);
        if (!q || !c || !(q->success_rate >= 0.99) || !(c->success_rate >= 0.99)) {
            healthy = false;
            continue;
        }
        if (!(c->me > q->me)) ordered = false;
        gain_sum += (c->me - q->me) / c->me;
        me_q.push_back(q->me);
        me_c.push_back(c->me);
    }
    const double mean_gain = gain_sum / static_cast<double>(cfg.eta_grid.size());

    // Mean error may not decrease along the grid by more than one pooled
    // standard error, per mode.
    for (NoiseMode mode : cfg.modes) {
        for (size_t i = 0; i + 1 < cfg.eta_grid.size(); ++i) {
            const SummaryCell* lo = find_cell(cells, cfg.eta_grid[i], mode);
            const SummaryCell* hi = find_cell(cells, cfg.eta_grid[i + 1], mode);
            if (!lo || !hi) {
                monotone = false;
                continue;
            }
            const double se_lo = cell_stderr(records, cfg.eta_grid[i], mode);
            const double se_hi = cell_stderr(records, cfg.eta_grid[i + 1], mode);
            const double pooled = std::sqrt(se_lo * se_lo + se_hi * se_hi);
            if (hi->me < lo->me - pooled) monotone = false;
        }
    }

    Outcome out;
    out.pass = healthy && ordered && monotone && mean_gain >= kGainFloor;
    out.detail = fmt(
        "mean gain %.3f (floor %.2f), classical > quantum at every eta: %s, "
        "monotone within 1 SE: %s, r=%d",
        mean_gain, kGainFloor, ordered ? "yes" : "NO", monotone ? "yes" : "NO", kTrials);
    return out;
}

// --- criterion 2: noiseless recovery ------------------------------------

Outcome criterion2(const std::string& config_path) {
    constexpr double kMeCap = 1e-2;

    ExperimentConfig cfg = base_config(config_path);
    cfg.trials = 100;
    cfg.eta_grid = {0.0};
    const std::vector<SummaryCell> cells = summarize(run_campaign(cfg));
    const SummaryCell* q = find_cell(cells, 0.0, NoiseMode::quantum_assisted);
    const SummaryCell* c = find_cell(cells, 0.0, NoiseMode::classical);

    Outcome out;
    out.pass = q && c && q->trials == 100 && c->trials == 100 && q->me < kMeCap &&
               c->me < kMeCap;
    out.detail = fmt("eta=0 ME quantum %.2e m, classical %.2e m (cap %.0e m), 100 trials",
                     q ? q->me : NAN, c ? c->me : NAN, kMeCap);
    return out;
}

// --- criterion 3: bound coherence ---------------------------------------

Outcome criterion3(const std::string& config_path) {
    constexpr double kBoundSlack = 0.8;
    constexpr double kLinearityTol = 1e-10;

    ExperimentConfig cfg = base_config(config_path);
    cfg.trials = 500;
    cfg.eta_grid = {0.01, 0.02, 0.03, 0.04};
    cfg.modes = {NoiseMode::quantum_assisted};
    const std::vector<SummaryCell> cells = summarize(run_campaign(cfg));

    bool coherent = true, linear = true;
    double ref_slope = 0.0, worst_ratio = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < cfg.eta_grid.size(); ++i) {
        const double eta = cfg.eta_grid[i];
        const SummaryCell* q = find_cell(cells, eta, NoiseMode::quantum_assisted);
        if (!q || !std::isfinite(q->mean_bound) || !std::isfinite(q->me)) {
            coherent = false;
            continue;
        }
        worst_ratio = std::min(worst_ratio, q->me / q->mean_bound);
        if (!(kBoundSlack * q->mean_bound <= q->me)) coherent = false;
        const double slope = q->mean_bound / eta;
        if (i == 0) {
            ref_slope = slope;
        } else if (std::abs(slope - ref_slope) > kLinearityTol * std::abs(ref_slope)) {
            linear = false;
        }
    }

    Outcome out;
    out.pass = coherent && linear;
    out.detail = fmt(
        "min ME / mean-bound ratio %.3f (needs >= %.2f), bound linear in eta to "
        "1e-10 relative: %s",
        worst_ratio, kBoundSlack, linear ? "yes" : "NO");
    return out;
}

// --- criterion 4: information matrix vs curvature oracle ----------------

Outcome criterion4(const std::string& config_path) {
    constexpr double kRelTol = 1e-4;
    constexpr int kGeometries = 20;

    const ExperimentConfig cfg = base_config(config_path);
    const AnchorSet anchors = cfg.anchor_set();
    const RangingScenario scen = cfg.scenario();
    const double eta = 0.02;

    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    int checked = 0;
    double worst = 0.0;
    for (int rep = 0; rep < 200 && checked < kGeometries; ++rep) {
        Point x(3);
        x << u(rng), u(rng), u(rng);
        FisherInfo info;
        try {
            info = fisher_information(x, anchors, scen, eta);
        } catch (const Error&) {
            continue;
        }
        const Matrix H = testing::fd_negative_hessian(x, anchors, scen, eta);
        worst = std::max(worst, (info.J - H).norm() / info.J.norm());
        ++checked;
    }

    Outcome out;
    out.pass = checked == kGeometries && worst <= kRelTol;
    out.detail = fmt("%d geometries, worst relative Frobenius gap %.2e (tol %.0e)",
                     checked, worst, kRelTol);
    return out;
}

// --- criterion 5: noise-model statistics ---------------------------------

Outcome criterion5(const std::string& config_path) {
    constexpr double kRelTol = 0.05;
    constexpr int kDraws = 100000;

    const ExperimentConfig cfg = base_config(config_path);
    const AnchorSet anchors = cfg.anchor_set();
    const RangingScenario scen = cfg.scenario();
    Point x(3);
    x << 1.3, 0.45, -0.8;
    const double eta = 0.03;
    const int m = scen.size();
    const Vector truth = truth_vector(x, anchors, scen);

    Vector qsum = Vector::Zero(m), qsq = Vector::Zero(m);
    Vector csum = Vector::Zero(m), csq = Vector::Zero(m);
    for (int t = 0; t < kDraws; ++t) {
        NoiseSpec spec{eta, NoiseMode::quantum_assisted, 505,
                       static_cast<std::uint64_t>(t)};
        Vector v = measure(x, anchors, scen, spec).values;
        qsum += v;
        qsq += v.cwiseProduct(v);
        spec.mode = NoiseMode::classical;
        v = measure(x, anchors, scen, spec).values;
        csum += v;
        csq += v.cwiseProduct(v);
    }

    bool match = true, dominance = true;
    double worst_rel = 0.0;
    for (int k = 0; k < m; ++k) {
        const double qvar = qsq[k] / kDraws - std::pow(qsum[k] / kDraws, 2);
        const double cvar = csq[k] / kDraws - std::pow(csum[k] / kDraws, 2);
        const int i = scen.rows[k].indices[0] - 1;
        const int j = scen.rows[k].indices[1] - 1;
        const double l1 = (x - anchors[i]).norm();
        const double l2 = (x - anchors[j]).norm();
        const double qexp = eta * eta * truth[k] * truth[k];
        const double cexp = eta * eta * (l1 * l1 + l2 * l2);
        worst_rel = std::max(worst_rel, std::abs(qvar - qexp) / qexp);
        worst_rel = std::max(worst_rel, std::abs(cvar - cexp) / cexp);
        if (std::abs(qvar - qexp) > kRelTol * qexp) match = false;
        if (std::abs(cvar - cexp) > kRelTol * cexp) match = false;
        if (cvar < qvar) dominance = false;
    }

    Outcome out;
    out.pass = match && dominance;
    out.detail = fmt(
        "worst per-row variance mismatch %.1f%% (tol %.0f%%), classical >= quantum "
        "variance on every row: %s, %d draws",
        100.0 * worst_rel, 100.0 * kRelTol, dominance ? "yes" : "NO", kDraws);
    return out;
}

// --- criterion 6: solver integrity ---------------------------------------

Outcome criterion6(const std::string& config_path) {
    constexpr double kResidualCap = 1e-8;
    constexpr double kPsdFloor = -1e-8;
    constexpr double kMedianCap = 0.05;
    constexpr int kInstances = 100;

    const ExperimentConfig cfg = base_config(config_path);
    const AnchorSet anchors = cfg.anchor_set();
    const RangingScenario scen = cfg.scenario();
    const double eta = 0.01;

    std::mt19937_64 oracle_rng(606);
    int optimal = 0, clean = 0;
    std::vector<double> dist;
    for (int t = 0; t < kInstances; ++t) {
        const std::optional<Point> x = sample_sensor(cfg, t);
        if (!x) continue;
        const NoiseSpec spec{eta, NoiseMode::quantum_assisted, cfg.master_seed,
                             static_cast<std::uint64_t>(t)};
        const Vector d = measure(*x, anchors, scen, spec).values;
        const ConicProblem prob = assemble_relaxation(anchors, scen, d, cfg.delta);
        const LocalizationSolution sol = solve_conic(prob, cfg.solver);
        if (sol.status == LocalizationStatus::optimal) ++optimal;
        if (sol.primal_res <= kResidualCap && sol.dual_res <= kResidualCap &&
            sol.psd_min_eigenvalue() >= kPsdFloor) {
            ++clean;
        }
        const Point ref = nls_oracle(anchors, scen, d, 20, oracle_rng, cfg.dx);
        dist.push_back((sol.x_hat - ref).norm());
    }
    const double med = median(dist);

    Outcome out;
    out.pass = optimal == kInstances && clean == kInstances && med < kMedianCap;
    out.detail = fmt(
        "%d/%d optimal, %d/%d with residuals <= 1e-8 and PSD floor, median "
        "distance to multi-start oracle %.4f m (cap %.2f m)",
        optimal, kInstances, clean, kInstances, med, kMedianCap);
    return out;
}

// --- criterion 7: runtime envelope ---------------------------------------

Outcome criterion7(const std::string& config_path) {
    constexpr double kMeanSecondsCap = 5.0;
    constexpr double kModeSkewCap = 0.20;

    ExperimentConfig cfg = base_config(config_path);
    cfg.trials = 50;
    cfg.eta_grid = {0.02};
    const std::vector<SummaryCell> cells = summarize(run_campaign(cfg));
    const SummaryCell* q = find_cell(cells, 0.02, NoiseMode::quantum_assisted);
    const SummaryCell* c = find_cell(cells, 0.02, NoiseMode::classical);

    Outcome out;
    if (!q || !c) {
        out.detail = "campaign produced no cells";
        return out;
    }
    const double skew =
        std::abs(q->mean_seconds - c->mean_seconds) / std::max(q->mean_seconds, c->mean_seconds);
    out.pass = q->mean_seconds <= kMeanSecondsCap && c->mean_seconds <= kMeanSecondsCap &&
               skew <= kModeSkewCap;
    out.detail = fmt(
        "mean solve %.3f s quantum / %.3f s classical (cap %.0f s), mode skew "
        "%.1f%% (cap %.0f%%)",
        q->mean_seconds, c->mean_seconds, kMeanSecondsCap, 100.0 * skew,
        100.0 * kModeSkewCap);
    return out;
}

// --- criterion 8: phase estimation ---------------------------------------

Outcome criterion8(const std::string&) {
    constexpr double kRatioTol = 0.2;  // of the ideal 0.5

    // Exact inversion on expected counts at the cardinal phases.
    bool exact = true;
    const std::int64_t n = 1000;
    for (double theta : {0.0, M_PI_2, M_PI}) {
        const double p0 = outcome_probability(theta).first;
        const auto zeros = static_cast<std::int64_t>(std::llround(p0 * n));
        if (estimate_phase(ShotRecord{n, zeros}) != theta) exact = false;
    }

    // Shot noise: quadrupling N must halve the RMSE.
    const double theta = M_PI / 3.0;
    const std::vector<std::int64_t> shots = {1000, 4000, 16000};
    const int reps = 3000;
    std::vector<double> rmse;
    for (std::int64_t N : shots) {
        std::mt19937_64 rng(808 + static_cast<std::uint64_t>(N));
        double sq = 0.0;
        for (int r = 0; r < reps; ++r) {
            const double est = estimate_phase(sample_shots(theta, N, rng));
            sq += (est - theta) * (est - theta);
        }
        rmse.push_back(std::sqrt(sq / reps));
    }
    const double r1 = rmse[1] / rmse[0];
    const double r2 = rmse[2] / rmse[1];
    const bool halves = std::abs(r1 - 0.5) <= kRatioTol * 0.5 &&
                        std::abs(r2 - 0.5) <= kRatioTol * 0.5;

    Outcome out;
    out.pass = exact && halves;
    out.detail = fmt(
        "cardinal-phase inversion exact: %s, RMSE ratios %.3f and %.3f for 4x "
        "shots (ideal 0.500 +- %.0f%%)",
        exact ? "yes" : "NO", r1, r2, 100.0 * kRatioTol);
    return out;
}

// --- criterion 9: determinism --------------------------------------------

Outcome criterion9(const std::string& config_path) {
    ExperimentConfig cfg = base_config(config_path);
    cfg.trials = 25;

    const std::vector<TrialRecord> first = run_campaign(cfg);
    const std::vector<TrialRecord> second = run_campaign(cfg);
    const bool records_same =
        strip_timing(records_to_csv(first)) == strip_timing(records_to_csv(second));
    const bool summary_same = strip_timing(summary_to_csv(summarize(first))) ==
                              strip_timing(summary_to_csv(summarize(second)));

    Outcome out;
    out.pass = records_same && summary_same;
    out.detail = fmt(
        "records CSV identical: %s, summary CSV identical: %s (timing columns "
        "excluded, %zu records)",
        records_same ? "yes" : "NO", summary_same ? "yes" : "NO", first.size());
    return out;
}

using CriterionFn = Outcome (*)(const std::string&);

struct Criterion {
    int id;
    const char* name;
    CriterionFn fn;
};

const Criterion kCriteria[] = {
    {1, "quantum advantage", criterion1},
    {2, "noiseless recovery", criterion2},
    {3, "error bound coherence", criterion3},
    {4, "information matrix vs curvature oracle", criterion4},
    {5, "noise-model statistics", criterion5},
    {6, "solver integrity", criterion6},
    {7, "runtime envelope", criterion7},
    {8, "phase estimation", criterion8},
    {9, "campaign determinism", criterion9},
};

}  // namespace

int main(int argc, char** argv) {
    int selected = 0;  // 0 = run everything
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            selected = std::atoi(argv[++i]);
        } else if (std::strcmp(argv[i], "--config") == 0 && i + 1 < argc) {
            config_path = argv[++i];
        } else {
            std::fprintf(stderr, "usage: %s [--criterion N] [--config path]\n", argv[0]);
            return 2;
        }
    }
    if (selected < 0 || selected > 9) {
        std::fprintf(stderr, "criterion must be in 1..9\n");
        return 2;
    }

    int failures = 0;
    for (const Criterion& crit : kCriteria) {
        if (selected != 0 && crit.id != selected) continue;
        Outcome out;
        try {
            out = crit.fn(config_path);
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        std::printf("[%s] criterion %d (%s): %s\n", out.pass ? "PASS" : "FAIL", crit.id,
                    crit.name, out.detail.c_str());
        std::fflush(stdout);
        if (!out.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
