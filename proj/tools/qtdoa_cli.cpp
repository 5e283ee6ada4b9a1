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

// Command-line front end: `simulate` runs a Monte Carlo campaign from a
// JSON config, `solve-one` solves a single localization instance, `crlb`
// prints the information matrix and error bound at a position.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qtdoa/crlb.hpp"
#include "qtdoa/harness.hpp"

using namespace qtdoa;

namespace {

std::vector<NoiseMode> parse_modes(const std::vector<std::string>& names) {
    std::vector<NoiseMode> modes;
    for (const std::string& name : names) modes.push_back(noise_mode_from_string(name));
    return modes;
}

int run_simulate(const std::string& config_path, const std::vector<double>& eta_grid,
                 int trials, const std::vector<std::string>& modes, std::uint64_t seed,
                 bool has_seed, bool weighted, const std::string& out_path,
                 const std::string& summary_path) {
    ExperimentConfig cfg = read_config(config_path);
    if (!eta_grid.empty()) cfg.eta_grid = eta_grid;
    if (trials > 0) cfg.trials = trials;
    if (!modes.empty()) cfg.modes = parse_modes(modes);
    if (has_seed) cfg.master_seed = seed;
    if (weighted) cfg.weighted = true;
    cfg.validate();

    const std::vector<TrialRecord> records = run_campaign(cfg);
    const std::vector<SummaryCell> cells = summarize(records);
    std::fputs(format_summary(cells).c_str(), stdout);

    if (!out_path.empty()) write_records_csv(records, out_path);
    if (!summary_path.empty()) write_summary_csv(cells, summary_path);

    int failed = 0, skipped = 0;
    for (const TrialRecord& rec : records) {
        if (rec.skipped) {
            ++skipped;
        } else if (rec.status != LocalizationStatus::optimal) {
            ++failed;
        }
    }
    if (failed > 0 || skipped > 0) {
        std::fprintf(stderr, "note: %d non-optimal, %d skipped of %zu trials\n", failed,
                     skipped, records.size());
    }
    for (const SummaryCell& cell : cells) {
        if (cell.successes == 0) {
            std::fprintf(stderr, "error: no successful trial at eta=%g mode=%s\n",
                         cell.eta, to_string(cell.mode).c_str());
            return 1;
        }
    }
    return 0;
}

int run_solve_one(const std::string& config_path, double eta, const std::string& mode,
                  std::uint64_t seed) {
    ExperimentConfig cfg = read_config(config_path);
    cfg.master_seed = seed;
    const AnchorSet anchors = cfg.anchor_set();
    const RangingScenario scen = cfg.scenario();

    const std::optional<Point> x = sample_sensor(cfg, 0);
    if (!x) {
        std::fprintf(stderr, "error: could not sample a non-degenerate sensor\n");
        return 1;
    }
    NoiseSpec spec;
    spec.eta = eta;
    spec.mode = noise_mode_from_string(mode);
    spec.seed = seed;
    spec.trial = 0;
    const MeasurementBatch batch = measure(*x, anchors, scen, spec);

    std::optional<Vector> weights;
    if (cfg.weighted) weights = mle_weights(batch.values, anchors.span());
    const LocalizationSolution sol =
        localize(anchors, scen, batch.values, cfg.delta, weights, cfg.solver);

    auto print_point = [](const char* label, const Point& p) {
        std::printf("%s:", label);
        for (int j = 0; j < p.size(); ++j) std::printf(" %.9g", p[j]);
        std::printf("\n");
    };
    print_point("x_true", *x);
    print_point("x_hat", sol.x_hat);
    std::printf("error_m: %.9g\n", (sol.x_hat - *x).norm());
    std::printf("status: %s\n", to_string(sol.status).c_str());
    std::printf("primal_res: %.3e\ndual_res: %.3e\nrel_gap: %.3e\n", sol.primal_res,
                sol.dual_res, sol.rel_gap);
    std::printf("gamma_hat: %.9g\npsd_min_eig: %.3e\n", sol.gamma_hat,
                sol.psd_min_eigenvalue());
    std::printf("iterations: %d\nseconds: %.4f\n", sol.iterations, sol.solve_seconds);
    if (eta > 0.0) {
        try {
            const double bound = jensen_bound(fisher_information(*x, anchors, scen, eta));
            std::printf("jensen_bound_m: %.9g\n", bound);
        } catch (const Error& e) {
            std::printf("jensen_bound_m: unavailable (%s)\n", e.what());
        }
    }
    return sol.status == LocalizationStatus::optimal ? 0 : 1;
}

int run_crlb(const std::string& config_path, double eta, const std::vector<double>& coords) {
    ExperimentConfig cfg = read_config(config_path);
    const AnchorSet anchors = cfg.anchor_set();
    const RangingScenario scen = cfg.scenario();
    Point x(static_cast<int>(coords.size()));
    for (size_t j = 0; j < coords.size(); ++j) x[static_cast<int>(j)] = coords[j];

    const FisherInfo info = fisher_information(x, anchors, scen, eta);
    std::printf("J (1/m^2):\n");
    for (int i = 0; i < info.J.rows(); ++i) {
        for (int j = 0; j < info.J.cols(); ++j) std::printf(" %14.6e", info.J(i, j));
        std::printf("\n");
    }
    std::printf("jensen_bound_m: %.9g\n", jensen_bound(info));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quantum-assisted TDoA localization toolkit"};
    app.require_subcommand(1);

    std::string config_path, mode = "quantum", out_path, summary_path;
    std::vector<double> eta_grid, coords;
    std::vector<std::string> modes;
    int trials = 0;
    std::uint64_t seed = 0;
    double eta = 0.0;
    bool weighted = false;

    CLI::App* simulate = app.add_subcommand("simulate", "Run a Monte Carlo campaign");
    simulate->add_option("--config", config_path, "JSON campaign configuration")
        ->required();
    simulate->add_option("--eta-grid", eta_grid, "Override the noise-level grid")
        ->delimiter(',');
    simulate->add_option("--trials", trials, "Override the trial count");
    simulate->add_option("--modes", modes, "Override the mode list (quantum,classical)")
        ->delimiter(',');
    CLI::Option* seed_opt = simulate->add_option("--seed", seed, "Override the master seed");
    simulate->add_flag("--weighted", weighted, "Use likelihood row weights");
    simulate->add_option("--out", out_path, "Write per-trial records CSV here");
    simulate->add_option("--summary", summary_path, "Write the summary CSV here");

    CLI::App* solve_one = app.add_subcommand("solve-one", "Solve a single instance");
    solve_one->add_option("--config", config_path, "JSON campaign configuration")
        ->required();
    solve_one->add_option("--eta", eta, "Relative noise level")->required();
    solve_one->add_option("--mode", mode, "quantum or classical");
    solve_one->add_option("--seed", seed, "Instance seed")->required();

    CLI::App* crlb = app.add_subcommand("crlb", "Print the information matrix and bound");
    crlb->add_option("--config", config_path, "JSON campaign configuration")->required();
    crlb->add_option("--eta", eta, "Relative noise level")->required();
    crlb->add_option("--x", coords, "Sensor position a,b,c")->required()->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            return run_simulate(config_path, eta_grid, trials, modes, seed,
                                seed_opt->count() > 0, weighted, out_path, summary_path);
        }
        if (solve_one->parsed()) return run_solve_one(config_path, eta, mode, seed);
        if (crlb->parsed()) return run_crlb(config_path, eta, coords);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
