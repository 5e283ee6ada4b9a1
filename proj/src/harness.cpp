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

#include "qtdoa/harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "qtdoa/crlb.hpp"
#include "qtdoa/rng.hpp"

namespace qtdoa {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

/// Shortest decimal form with 12 significant digits; "nan" for non-finite.
std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

AnchorSet ExperimentConfig::anchor_set() const { return AnchorSet(anchors); }

RangingScenario ExperimentConfig::scenario() const {
    return RangingScenario::tdoa_pairs(pairs, static_cast<int>(anchors.size()));
}

void ExperimentConfig::validate() const {
    if (!(dx > 0.0) || !std::isfinite(dx)) throw ValidationError("dx must be positive");
    if (!(da > 0.0) || !std::isfinite(da)) throw ValidationError("da must be positive");
    const AnchorSet set = anchor_set();
    for (const Point& a : set.points()) {
        if ((a.array().abs() > da + 1e-12).any()) {
            throw ValidationError("anchor lies outside the [-da, da] box");
        }
    }
    scenario().validate();
    if (eta_grid.empty()) throw ValidationError("eta grid is empty");
    for (double eta : eta_grid) {
        if (!(eta >= 0.0) || !(eta < 1.0)) {
            throw ValidationError("eta values must lie in [0, 1)");
        }
    }
    if (trials < 1) throw ValidationError("trials must be >= 1");
    if (!(delta >= 0.0) || !std::isfinite(delta)) {
        throw ValidationError("delta must be finite and nonnegative");
    }
    if (modes.empty()) throw ValidationError("mode list is empty");
    for (size_t i = 0; i < modes.size(); ++i) {
        for (size_t j = i + 1; j < modes.size(); ++j) {
            if (modes[i] == modes[j]) throw ValidationError("duplicate mode in list");
        }
    }
    if (!(kappa > 0.0) || !std::isfinite(kappa)) {
        throw ValidationError("kappa must be positive");
    }
    solver.validate();
    if (threads < 0) throw ValidationError("threads must be >= 0");
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    const double coords[16][3] = {
        {1, 1, 1},  {-1, 1, 1},  {1, -1, 1},  {-1, -1, 1},
        {1, 1, -1}, {-1, 1, -1}, {1, -1, -1}, {-1, -1, -1},
        {0, 0, 1},  {0, 0, -1},  {0, 1, 0},   {0, -1, 0},
        {1, 0, 0},  {-1, 0, 0},  {0, 0, 0.5}, {0, 0, -0.5},
    };
    cfg.anchors.reserve(16);
    for (const auto& c : coords) {
        Point p(3);
        p << c[0], c[1], c[2];
        cfg.anchors.push_back(std::move(p));
    }
    cfg.pairs = {{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}, {11, 12}, {13, 14}, {15, 16}};
    return cfg;
}

std::optional<Point> sample_sensor(const ExperimentConfig& config, int trial) {
    const AnchorSet anchors = config.anchor_set();
    const RangingScenario scenario = config.scenario();
    const int dim = anchors.dim();
    for (int attempt = 0; attempt < 100; ++attempt) {
        Point x(dim);
        for (int j = 0; j < dim; ++j) {
            const std::uint64_t key =
                rng::derive_key(config.master_seed, rng::Stream::sensor,
                                static_cast<std::uint64_t>(trial),
                                static_cast<std::uint64_t>(attempt),
                                static_cast<std::uint64_t>(j));
            x[j] = config.dx * (2.0 * rng::uniform01(key) - 1.0);
        }
        const Vector truth = truth_vector(x, anchors, scenario);
        if ((truth.array().abs() >= 1e-6).all()) return x;
    }
    return std::nullopt;
}

namespace {

struct Cell {
    double eta;
    NoiseMode mode;
};

TrialRecord run_trial(const ExperimentConfig& config, const AnchorSet& anchors,
                      const RangingScenario& scenario, const Cell& cell, int trial) {
    TrialRecord rec;
    rec.trial = trial;
    rec.eta = cell.eta;
    rec.mode = cell.mode;
    rec.x_true = Vector::Zero(anchors.dim());
    rec.x_hat = Vector::Zero(anchors.dim());
    rec.error_m = kNan;
    rec.bound_m = kNan;

    const std::optional<Point> sensor = sample_sensor(config, trial);
    if (!sensor) {
        rec.skipped = true;
        return rec;
    }
    rec.x_true = *sensor;

    NoiseSpec spec;
    spec.eta = cell.eta;
    spec.mode = cell.mode;
    spec.seed = config.master_seed;
    spec.trial = static_cast<std::uint64_t>(trial);
    const MeasurementBatch batch = measure(*sensor, anchors, scenario, spec);

    std::optional<Vector> weights;
    if (config.weighted) weights = mle_weights(batch.values, anchors.span());

    const LocalizationSolution sol =
        localize(anchors, scenario, batch.values, config.delta, weights, config.solver);
    rec.x_hat = sol.x_hat;
    rec.error_m = (sol.x_hat - *sensor).norm();
    rec.status = sol.status;
    rec.iterations = sol.iterations;
    rec.seconds = sol.solve_seconds;

    if (cell.eta > 0.0) {
        try {
            rec.bound_m = jensen_bound(fisher_information(*sensor, anchors, scenario, cell.eta));
        } catch (const Error&) {
            rec.bound_m = kNan;
        }
    }
    return rec;
}

}  // namespace

std::vector<TrialRecord> run_campaign(const ExperimentConfig& config) {
    config.validate();
    const AnchorSet anchors = config.anchor_set();
    const RangingScenario scenario = config.scenario();

    std::vector<Cell> cells;
    for (double eta : config.eta_grid) {
        for (NoiseMode mode : config.modes) cells.push_back({eta, mode});
    }
    const size_t total = cells.size() * static_cast<size_t>(config.trials);
    std::vector<TrialRecord> records(total);

    unsigned n_threads = config.threads > 0 ? static_cast<unsigned>(config.threads)
                                            : std::thread::hardware_concurrency();
    if (n_threads == 0) n_threads = 1;
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(total));

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= total) return;
            const Cell& cell = cells[i / config.trials];
            const int trial = static_cast<int>(i % config.trials);
            try {
                records[i] = run_trial(config, anchors, scenario, cell, trial);
            } catch (const std::exception&) {
                TrialRecord rec;
                rec.trial = trial;
                rec.eta = cell.eta;
                rec.mode = cell.mode;
                rec.x_true = Vector::Zero(anchors.dim());
                rec.x_hat = Vector::Zero(anchors.dim());
                rec.error_m = kNan;
                rec.bound_m = kNan;
                rec.status = LocalizationStatus::numerical_failure;
                records[i] = rec;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    return records;
}

std::vector<SummaryCell> summarize(const std::vector<TrialRecord>& records) {
    std::vector<SummaryCell> cells;
    std::vector<double> err_sum, bound_sum, sec_sum;
    std::vector<int> bound_count, attempt_count;

    for (const TrialRecord& rec : records) {
        size_t idx = 0;
        for (; idx < cells.size(); ++idx) {
            if (cells[idx].eta == rec.eta && cells[idx].mode == rec.mode) break;
        }
        if (idx == cells.size()) {
            SummaryCell cell;
            cell.eta = rec.eta;
            cell.mode = rec.mode;
            cells.push_back(cell);
            err_sum.push_back(0.0);
            bound_sum.push_back(0.0);
            sec_sum.push_back(0.0);
            bound_count.push_back(0);
            attempt_count.push_back(0);
        }
        SummaryCell& cell = cells[idx];
        cell.trials += 1;
        if (rec.skipped) {
            cell.skipped += 1;
            continue;
        }
        attempt_count[idx] += 1;
        sec_sum[idx] += rec.seconds;
        if (rec.status == LocalizationStatus::optimal) {
            cell.successes += 1;
            err_sum[idx] += rec.error_m;
        }
        if (std::isfinite(rec.bound_m)) {
            bound_count[idx] += 1;
            bound_sum[idx] += rec.bound_m;
        }
    }
    for (size_t i = 0; i < cells.size(); ++i) {
        SummaryCell& cell = cells[i];
        cell.me = cell.successes > 0 ? err_sum[i] / cell.successes : kNan;
        cell.mean_bound = bound_count[i] > 0 ? bound_sum[i] / bound_count[i] : kNan;
        cell.success_rate =
            attempt_count[i] > 0 ? static_cast<double>(cell.successes) / attempt_count[i] : 0.0;
        cell.mean_seconds = attempt_count[i] > 0 ? sec_sum[i] / attempt_count[i] : 0.0;
    }
    return cells;
}

const char* const kRecordsCsvHeader =
    "trial,eta,mode,x0,x1,x2,xhat0,xhat1,xhat2,error_m,bound_m,status,iters,seconds";

std::string records_to_csv(const std::vector<TrialRecord>& records) {
    std::string out = kRecordsCsvHeader;
    out += '\n';
    for (const TrialRecord& rec : records) {
        if (rec.x_true.size() != 3 || rec.x_hat.size() != 3) {
            throw ValidationError("records CSV requires 3-D positions");
        }
        out += std::to_string(rec.trial);
        out += ',';
        out += fmt(rec.eta);
        out += ',';
        out += to_string(rec.mode);
        for (int j = 0; j < 3; ++j) {
            out += ',';
            out += fmt(rec.x_true[j]);
        }
        for (int j = 0; j < 3; ++j) {
            out += ',';
            out += fmt(rec.x_hat[j]);
        }
        out += ',';
        out += fmt(rec.error_m);
        out += ',';
        out += fmt(rec.bound_m);
        out += ',';
        out += rec.skipped ? "skipped" : to_string(rec.status);
        out += ',';
        out += std::to_string(rec.iterations);
        out += ',';
        out += fmt(rec.seconds);
        out += '\n';
    }
    return out;
}

void write_records_csv(const std::vector<TrialRecord>& records, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path + " for writing");
    f << records_to_csv(records);
    if (!f) throw Error("failed writing " + path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

std::vector<TrialRecord> read_records_csv(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line != kRecordsCsvHeader) {
        throw ValidationError("unrecognized records CSV header in " + path);
    }
    std::vector<TrialRecord> records;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 14) {
            throw ValidationError("bad records CSV row: " + line);
        }
        TrialRecord rec;
        rec.trial = std::stoi(fields[0]);
        rec.eta = std::stod(fields[1]);
        rec.mode = noise_mode_from_string(fields[2]);
        rec.x_true = Vector(3);
        rec.x_hat = Vector(3);
        for (int j = 0; j < 3; ++j) rec.x_true[j] = std::stod(fields[3 + j]);
        for (int j = 0; j < 3; ++j) rec.x_hat[j] = std::stod(fields[6 + j]);
        rec.error_m = std::stod(fields[9]);
        rec.bound_m = std::stod(fields[10]);
        if (fields[11] == "skipped") {
            rec.skipped = true;
            rec.status = LocalizationStatus::numerical_failure;
        } else if (fields[11] == "optimal") {
            rec.status = LocalizationStatus::optimal;
        } else if (fields[11] == "max_iters") {
            rec.status = LocalizationStatus::max_iters;
        } else if (fields[11] == "numerical_failure") {
            rec.status = LocalizationStatus::numerical_failure;
        } else {
            throw ValidationError("unknown status " + fields[11]);
        }
        rec.iterations = std::stoi(fields[12]);
        rec.seconds = std::stod(fields[13]);
        records.push_back(std::move(rec));
    }
    return records;
}

std::string summary_to_csv(const std::vector<SummaryCell>& cells) {
    std::string out = "eta,mode,trials,successes,skipped,me_m,mean_bound_m,success_rate,mean_seconds\n";
    for (const SummaryCell& cell : cells) {
        out += fmt(cell.eta);
        out += ',';
        out += to_string(cell.mode);
        out += ',';
        out += std::to_string(cell.trials);
        out += ',';
        out += std::to_string(cell.successes);
        out += ',';
        out += std::to_string(cell.skipped);
        out += ',';
        out += fmt(cell.me);
        out += ',';
        out += fmt(cell.mean_bound);
        out += ',';
        out += fmt(cell.success_rate);
        out += ',';
        out += fmt(cell.mean_seconds);
        out += '\n';
    }
    return out;
}

void write_summary_csv(const std::vector<SummaryCell>& cells, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path + " for writing");
    f << summary_to_csv(cells);
    if (!f) throw Error("failed writing " + path);
}

std::string format_summary(const std::vector<SummaryCell>& cells) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%6s  %-9s  %7s  %10s  %10s  %8s  %9s\n", "eta", "mode",
                  "trials", "ME[m]", "bound[m]", "success", "sec/run");
    out += buf;
    for (const SummaryCell& cell : cells) {
        std::snprintf(buf, sizeof(buf), "%6.3f  %-9s  %7d  %10.5f  %10.5f  %7.1f%%  %9.4f\n",
                      cell.eta, to_string(cell.mode).c_str(), cell.trials, cell.me,
                      cell.mean_bound, 100.0 * cell.success_rate, cell.mean_seconds);
        out += buf;
    }
    return out;
}

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& scope) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError("unknown configuration key \"" + scope + item.key() + "\"");
        }
    }
}

}  // namespace

ExperimentConfig read_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open " + path);
    json doc;
    try {
        doc = json::parse(f);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("cannot parse ") + path + ": " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("configuration root must be an object");
    reject_unknown_keys(doc,
                        {"dx", "da", "anchors", "pairs", "eta_grid", "trials", "delta", "modes",
                         "master_seed", "weighted", "kappa", "solver", "threads"},
                        "");
    for (const char* key : {"anchors", "pairs"}) {
        if (!doc.contains(key)) {
            throw ConfigError(std::string("missing required key \"") + key + "\"");
        }
    }

    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.anchors.clear();
    cfg.pairs.clear();
    try {
        for (const auto& row : doc.at("anchors")) {
            Point p(static_cast<int>(row.size()));
            int j = 0;
            for (const auto& v : row) p[j++] = v.get<double>();
            cfg.anchors.push_back(std::move(p));
        }
        for (const auto& pair : doc.at("pairs")) {
            if (pair.size() != 2) throw ConfigError("each pair must have two indices");
            cfg.pairs.emplace_back(pair[0].get<int>(), pair[1].get<int>());
        }
        if (doc.contains("dx")) cfg.dx = doc["dx"].get<double>();
        if (doc.contains("da")) cfg.da = doc["da"].get<double>();
        if (doc.contains("eta_grid")) cfg.eta_grid = doc["eta_grid"].get<std::vector<double>>();
        if (doc.contains("trials")) cfg.trials = doc["trials"].get<int>();
        if (doc.contains("delta")) cfg.delta = doc["delta"].get<double>();
        if (doc.contains("modes")) {
            cfg.modes.clear();
            for (const auto& name : doc["modes"]) {
                cfg.modes.push_back(noise_mode_from_string(name.get<std::string>()));
            }
        }
        if (doc.contains("master_seed")) cfg.master_seed = doc["master_seed"].get<std::uint64_t>();
        if (doc.contains("weighted")) cfg.weighted = doc["weighted"].get<bool>();
        if (doc.contains("kappa")) cfg.kappa = doc["kappa"].get<double>();
        if (doc.contains("threads")) cfg.threads = doc["threads"].get<int>();
        if (doc.contains("solver")) {
            const json& s = doc["solver"];
            if (!s.is_object()) throw ConfigError("\"solver\" must be an object");
            reject_unknown_keys(s, {"tol_gap", "tol_feas", "max_iters", "step_fraction"},
                                "solver.");
            if (s.contains("tol_gap")) cfg.solver.tol_gap = s["tol_gap"].get<double>();
            if (s.contains("tol_feas")) cfg.solver.tol_feas = s["tol_feas"].get<double>();
            if (s.contains("max_iters")) cfg.solver.max_iters = s["max_iters"].get<int>();
            if (s.contains("step_fraction")) {
                cfg.solver.step_fraction = s["step_fraction"].get<double>();
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value in ") + path + ": " + e.what());
    }
    cfg.validate();
    return cfg;
}

void write_config(const ExperimentConfig& config, const std::string& path) {
    config.validate();
    json doc;
    doc["dx"] = config.dx;
    doc["da"] = config.da;
    json anchors = json::array();
    for (const Point& a : config.anchors) {
        json row = json::array();
        for (int j = 0; j < a.size(); ++j) row.push_back(a[j]);
        anchors.push_back(std::move(row));
    }
    doc["anchors"] = std::move(anchors);
    json pairs = json::array();
    for (const auto& [i, j] : config.pairs) pairs.push_back(json::array({i, j}));
    doc["pairs"] = std::move(pairs);
    doc["eta_grid"] = config.eta_grid;
    doc["trials"] = config.trials;
    doc["delta"] = config.delta;
    json modes = json::array();
    for (NoiseMode mode : config.modes) modes.push_back(to_string(mode));
    doc["modes"] = std::move(modes);
    doc["master_seed"] = config.master_seed;
    doc["weighted"] = config.weighted;
    doc["kappa"] = config.kappa;
    doc["threads"] = config.threads;
    doc["solver"] = {{"tol_gap", config.solver.tol_gap},
                     {"tol_feas", config.solver.tol_feas},
                     {"max_iters", config.solver.max_iters},
                     {"step_fraction", config.solver.step_fraction}};
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path + " for writing");
    f << doc.dump(2) << '\n';
    if (!f) throw Error("failed writing " + path);
}

}  // namespace qtdoa
