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

#include "qtdoa/solver.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <limits>

namespace qtdoa {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix psd_block(const Matrix& ymat, const Vector& y) {
    const int n = static_cast<int>(y.size());
    Matrix m(n + 1, n + 1);
    m.topLeftCorner(n, n) = ymat;
    m.topRightCorner(n, 1) = y;
    m.bottomLeftCorner(1, n) = y.transpose();
    m(n, n) = 1.0;
    return m;
}

}  // namespace

std::string to_string(LocalizationStatus status) {
    switch (status) {
        case LocalizationStatus::optimal:
            return "optimal";
        case LocalizationStatus::max_iters:
            return "max_iters";
        case LocalizationStatus::numerical_failure:
            return "numerical_failure";
    }
    return "unknown";
}

double LocalizationSolution::psd_min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(psd_block(Y_hat, y_hat),
                                              Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
}

ConicProblem assemble_relaxation(const AnchorSet& anchors, const RangingScenario& scenario,
                                 const Vector& d, double delta,
                                 const std::optional<Vector>& weights) {
    scenario.validate();
    if (scenario.n_anchors != anchors.size()) {
        throw ValidationError("scenario anchor count disagrees with the anchor set");
    }
    if (!scenario.all_tdoa()) {
        throw UnsupportedScenarioError(
            "the relaxation requires pure difference rows (two anchors, opposite signs)");
    }
    const int n = anchors.size();
    const int m = scenario.size();
    const int dim = anchors.dim();
    if (static_cast<int>(d.size()) != m) {
        throw ValidationError("measurement vector length disagrees with the scenario");
    }
    if (!d.allFinite()) throw ValidationError("measurements must be finite");
    if (!(delta >= 0.0) || !std::isfinite(delta)) {
        throw ValidationError("trace penalty must be finite and nonnegative");
    }
    if (weights) {
        if (static_cast<int>(weights->size()) != m) {
            throw ValidationError("weight vector length disagrees with the scenario");
        }
        if (!weights->allFinite() || (weights->array() <= 0.0).any()) {
            throw ValidationError("weights must be positive and finite");
        }
    }

    ConicProblem problem;
    problem.n = n;
    problem.m = m;
    problem.d = dim;
    problem.delta = delta;
    problem.weights = weights;
    problem.x_offset = 0;
    problem.y_offset = dim;
    problem.ymat_offset = dim + n;
    const int ydim = conic::svec_dim(n);
    problem.gamma_offset = dim + n + ydim;
    problem.var_count = problem.gamma_offset + 1;

    const Matrix p = build_incidence(scenario);

    // Objective: (P'W^2 P + delta I) . Y - 2 (W^2 d)'P y.
    Matrix quad;
    Vector lin;
    if (weights) {
        const Vector w2 = weights->cwiseProduct(*weights);
        quad = p.transpose() * w2.asDiagonal() * p;
        lin = -2.0 * p.transpose() * w2.cwiseProduct(d);
    } else {
        quad = p.transpose() * p;
        lin = -2.0 * p.transpose() * d;
    }
    quad.diagonal().array() += delta;

    conic::Program& prog = problem.program;
    const int nvar = problem.var_count;
    prog.c = Vector::Zero(nvar);
    prog.c.segment(problem.y_offset, n) = lin;
    prog.c.segment(problem.ymat_offset, ydim) = conic::svec(quad);

    // Equalities: Y_ii - gamma + 2 a_i'x = ||a_i||^2.
    prog.A = Matrix::Zero(n, nvar);
    prog.b = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
        prog.A.block(i, problem.x_offset, 1, dim) = 2.0 * anchors[i].transpose();
        prog.A(i, problem.ymat_offset + conic::svec_index(i, i, n)) = 1.0;
        prog.A(i, problem.gamma_offset) = -1.0;
        prog.b[i] = anchors[i].squaredNorm();
    }

    const int n_pairs = n * (n - 1) / 2;
    conic::ConeSpec& cones = prog.cones;
    cones.nonneg = 2 * n_pairs;
    cones.soc.assign(1, dim + 2);
    cones.soc.insert(cones.soc.end(), n, dim + 1);
    cones.psd.assign(1, n + 1);

    const int cone_dim = cones.total_dim();
    prog.G = Matrix::Zero(cone_dim, nvar);
    prog.h = Vector::Zero(cone_dim);

    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    int row = 0;
    // Off-diagonal floors: Y_ij >= +/- (gamma - (a_i+a_j)'x + a_i'a_j).
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const Vector asum = anchors[i] + anchors[j];
            const double adot = anchors[i].dot(anchors[j]);
            const int yij = problem.ymat_offset + conic::svec_index(i, j, n);
            prog.G.block(row, problem.x_offset, 1, dim) = -asum.transpose();
            prog.G(row, yij) = -inv_sqrt2;
            prog.G(row, problem.gamma_offset) = 1.0;
            prog.h[row] = -adot;
            ++row;
            prog.G.block(row, problem.x_offset, 1, dim) = asum.transpose();
            prog.G(row, yij) = -inv_sqrt2;
            prog.G(row, problem.gamma_offset) = -1.0;
            prog.h[row] = adot;
            ++row;
        }
    }
    // gamma >= ||x||^2 as slack ((gamma+1)/2, x, (gamma-1)/2).
    prog.G(row, problem.gamma_offset) = -0.5;
    prog.h[row] = 0.5;
    ++row;
    prog.G.block(row, problem.x_offset, dim, dim) = -Matrix::Identity(dim, dim);
    row += dim;
    prog.G(row, problem.gamma_offset) = -0.5;
    prog.h[row] = -0.5;
    ++row;
    // y_i >= ||x - a_i|| as slack (y_i, x - a_i).
    for (int i = 0; i < n; ++i) {
        prog.G(row, problem.y_offset + i) = -1.0;
        ++row;
        prog.G.block(row, problem.x_offset, dim, dim) = -Matrix::Identity(dim, dim);
        prog.h.segment(row, dim) = -anchors[i];
        row += dim;
    }
    // PSD block [[Y, y], [y', 1]]; svec of the lifted matrix shares the
    // sqrt(2) scaling of svec(Y), so Y entries map with coefficient -1.
    const int p_order = n + 1;
    for (int j = 0; j < p_order; ++j) {
        for (int i = j; i < p_order; ++i) {
            const int out = row + conic::svec_index(i, j, p_order);
            if (i < n && j < n) {
                prog.G(out, problem.ymat_offset + conic::svec_index(i, j, n)) = -1.0;
            } else if (i == n && j < n) {
                prog.G(out, problem.y_offset + j) = -std::sqrt(2.0);
            } else {
                prog.h[out] = 1.0;
            }
        }
    }
    row += conic::svec_dim(p_order);
    if (row != cone_dim) throw Error("internal: cone row count mismatch");

    return problem;
}

LocalizationSolution solve_conic(const ConicProblem& problem, const SolverSettings& settings) {
    const auto start = std::chrono::steady_clock::now();
    const conic::Result res = conic::solve(problem.program, settings);
    const auto stop = std::chrono::steady_clock::now();

    LocalizationSolution sol;
    sol.x_hat = res.v.segment(problem.x_offset, problem.d);
    sol.y_hat = res.v.segment(problem.y_offset, problem.n);
    sol.Y_hat = conic::smat(res.v.segment(problem.ymat_offset, conic::svec_dim(problem.n)));
    sol.gamma_hat = res.v[problem.gamma_offset];
    switch (res.status) {
        case conic::SolveStatus::optimal:
            sol.status = LocalizationStatus::optimal;
            break;
        case conic::SolveStatus::max_iters:
            sol.status = LocalizationStatus::max_iters;
            break;
        case conic::SolveStatus::numerical_failure:
            sol.status = LocalizationStatus::numerical_failure;
            break;
    }
    sol.primal_res = res.primal_res;
    sol.dual_res = res.dual_res;
    sol.rel_gap = res.rel_gap;
    sol.iterations = res.iterations;
    sol.solve_seconds = std::chrono::duration<double>(stop - start).count();
    return sol;
}

LocalizationSolution localize(const AnchorSet& anchors, const RangingScenario& scenario,
                              const Vector& d, double delta,
                              const std::optional<Vector>& weights,
                              const SolverSettings& settings) {
    const ConicProblem problem = assemble_relaxation(anchors, scenario, d, delta, weights);
    LocalizationSolution sol = solve_conic(problem, settings);
    if (sol.status == LocalizationStatus::optimal) return sol;

    // Salvage a usable estimate: descend the raw objective from the conic
    // iterate and keep whichever point scores better.
    Point fallback = sol.x_hat;
    if (!fallback.allFinite()) fallback = Vector::Zero(anchors.dim());
    const Point polished = nls_refine(anchors, scenario, d, fallback);
    if (polished.allFinite() &&
        raw_objective(anchors, scenario, d, polished) <
            raw_objective(anchors, scenario, d, sol.x_hat)) {
        sol.x_hat = polished;
        sol.gamma_hat = polished.squaredNorm();
        for (int i = 0; i < anchors.size(); ++i) {
            sol.y_hat[i] = (polished - anchors[i]).norm();
        }
        sol.Y_hat = sol.y_hat * sol.y_hat.transpose();
    }
    return sol;
}

Vector mle_weights(const Vector& d, double anchor_span) {
    if (!(anchor_span > 0.0) || !std::isfinite(anchor_span)) {
        throw ValidationError("anchor span must be positive and finite");
    }
    if (!d.allFinite()) throw ValidationError("measurements must be finite");
    const double floor = 1e-3 * anchor_span;
    return d.array().abs().max(floor).inverse().matrix();
}

double raw_objective(const AnchorSet& anchors, const RangingScenario& scenario,
                     const Vector& d, const Point& x) {
    double total = 0.0;
    for (int k = 0; k < scenario.size(); ++k) {
        const double r = combined_distance(x, anchors, scenario.rows[k]) - d[k];
        total += r * r;
    }
    return total;
}

namespace {

/// Residuals r_k = sum_i omega_i ||x - a_i|| - d_k and their Jacobian.
void residuals_and_jacobian(const AnchorSet& anchors, const RangingScenario& scenario,
                            const Vector& d, const Point& x, Vector& r, Matrix& jac) {
    const int m = scenario.size();
    const int dim = anchors.dim();
    r.resize(m);
    jac.setZero(m, dim);
    for (int k = 0; k < m; ++k) {
        const RangingRow& row = scenario.rows[k];
        double combined = 0.0;
        for (size_t t = 0; t < row.indices.size(); ++t) {
            const Point diff = x - anchors[row.indices[t] - 1];
            const double dist = std::max(diff.norm(), 1e-12);
            combined += row.signs[t] * dist;
            jac.row(k) += (row.signs[t] / dist) * diff.transpose();
        }
        r[k] = combined - d[k];
    }
}

}  // namespace

Point nls_refine(const AnchorSet& anchors, const RangingScenario& scenario, const Vector& d,
                 const Point& x0) {
    validate_point(x0);
    if (x0.size() != anchors.dim()) {
        throw ValidationError("start point dimension disagrees with the anchors");
    }
    Point x = x0;
    Vector r;
    Matrix jac;
    residuals_and_jacobian(anchors, scenario, d, x, r, jac);
    double cost = r.squaredNorm();
    double damping = 1e-3;
    for (int iter = 0; iter < 200; ++iter) {
        const Vector grad = 2.0 * jac.transpose() * r;
        if (grad.norm() < 1e-10) break;
        Matrix normal = jac.transpose() * jac;
        bool accepted = false;
        for (int trial = 0; trial < 50; ++trial) {
            Matrix damped = normal;
            damped.diagonal().array() += damping;
            const Vector step = damped.ldlt().solve(-0.5 * grad);
            const Point cand = x + step;
            Vector rc;
            Matrix jc;
            residuals_and_jacobian(anchors, scenario, d, cand, rc, jc);
            const double cand_cost = rc.squaredNorm();
            if (std::isfinite(cand_cost) && cand_cost < cost) {
                x = cand;
                r = rc;
                jac = jc;
                cost = cand_cost;
                damping = std::max(damping / 3.0, 1e-12);
                accepted = true;
                break;
            }
            damping = std::min(damping * 10.0, 1e12);
        }
        if (!accepted) break;
    }
    return x;
}

Point nls_oracle(const AnchorSet& anchors, const RangingScenario& scenario, const Vector& d,
                 int starts, std::mt19937_64& rng, double box_halfwidth) {
    if (starts < 1) throw ValidationError("need at least one start");
    if (!(box_halfwidth > 0.0)) throw ValidationError("box halfwidth must be positive");
    std::uniform_real_distribution<double> coord(-box_halfwidth, box_halfwidth);
    Point best;
    double best_cost = kInf;
    for (int t = 0; t < starts; ++t) {
        Point x0(anchors.dim());
        for (int i = 0; i < anchors.dim(); ++i) x0[i] = coord(rng);
        const Point refined = nls_refine(anchors, scenario, d, x0);
        if (!refined.allFinite()) continue;
        const double cost = raw_objective(anchors, scenario, d, refined);
        if (cost < best_cost) {
            best_cost = cost;
            best = refined;
        }
    }
    if (best.size() == 0) throw Error("no start produced a finite refined point");
    return best;
}

Vector lift_point(const ConicProblem& problem, const AnchorSet& anchors, const Point& x) {
    validate_point(x);
    if (x.size() != anchors.dim() || anchors.size() != problem.n) {
        throw ValidationError("point or anchors disagree with the assembled problem");
    }
    const int n = problem.n;
    Vector v = Vector::Zero(problem.var_count);
    v.segment(problem.x_offset, problem.d) = x;
    Vector y(n);
    for (int i = 0; i < n; ++i) y[i] = (x - anchors[i]).norm();
    v.segment(problem.y_offset, n) = y;
    Matrix ymat = y * y.transpose();
    const double gamma = x.squaredNorm();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double floor =
                std::abs(gamma - (anchors[i] + anchors[j]).dot(x) + anchors[i].dot(anchors[j]));
            if (ymat(i, j) < floor) ymat(i, j) = ymat(j, i) = floor;
        }
    }
    v.segment(problem.ymat_offset, conic::svec_dim(n)) = conic::svec(ymat);
    v[problem.gamma_offset] = gamma;
    return v;
}

double max_constraint_violation(const ConicProblem& problem, const Vector& v) {
    const conic::Program& prog = problem.program;
    if (v.size() != prog.c.size()) throw ValidationError("variable vector length mismatch");
    double worst = -kInf;
    if (prog.A.rows() > 0) {
        worst = (prog.A * v - prog.b).cwiseAbs().maxCoeff();
    }
    const Vector s = prog.h - prog.G * v;
    int off = 0;
    if (prog.cones.nonneg > 0) {
        worst = std::max(worst, -s.segment(off, prog.cones.nonneg).minCoeff());
        off += prog.cones.nonneg;
    }
    for (int q : prog.cones.soc) {
        worst = std::max(worst, s.segment(off + 1, q - 1).norm() - s[off]);
        off += q;
    }
    for (int p : prog.cones.psd) {
        const Matrix m = conic::smat(s.segment(off, conic::svec_dim(p)));
        Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
        worst = std::max(worst, -eig.eigenvalues().minCoeff());
        off += conic::svec_dim(p);
    }
    return worst;
}

double relaxation_objective(const ConicProblem& problem, const Vector& v) {
    if (v.size() != problem.program.c.size()) {
        throw ValidationError("variable vector length mismatch");
    }
    return problem.program.c.dot(v);
}

}  // namespace qtdoa
