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

#ifndef QTDOA_SOLVER_HPP
#define QTDOA_SOLVER_HPP

#include <optional>
#include <random>
#include <string>

#include "qtdoa/conic.hpp"
#include "qtdoa/core.hpp"

namespace qtdoa {

/// Default trace-penalty coefficient applied to the lifted matrix variable.
inline constexpr double kDefaultDelta = 6e-7;

using SolverSettings = conic::Settings;

/// The assembled penalized relaxation of the pairwise localization problem.
///
/// Variables, in order: x in R^d, y in R^n, svec(Y) with Y in S^n, gamma.
/// Objective: (P'WP + delta I) . Y - 2 d'WP y with W = diag(weights^2)
/// (identity when unweighted). Constraints: n diagonal equalities
/// Y_ii = gamma - 2 a_i'x + ||a_i||^2; the n(n-1)/2 absolute-value pairs
/// Y_ij >= |gamma - (a_i+a_j)'x + a_i'a_j| split into two linear
/// inequalities; gamma >= ||x||^2 and y_i >= ||x - a_i|| as second-order
/// cones; and the PSD block [[Y, y], [y', 1]].
struct ConicProblem {
    conic::Program program;

    int n = 0;  // anchors
    int m = 0;  // rangings
    int d = 0;  // space dimension
    double delta = 0.0;
    std::optional<Vector> weights;  // per-row weights w_k (not squared)

    // Variable layout offsets into program vectors.
    int x_offset = 0;
    int y_offset = 0;
    int ymat_offset = 0;
    int gamma_offset = 0;
    int var_count = 0;
};

enum class LocalizationStatus {
    optimal,
    max_iters,
    numerical_failure,
};

std::string to_string(LocalizationStatus status);

struct LocalizationSolution {
    Point x_hat;
    Vector y_hat;
    Matrix Y_hat;
    double gamma_hat = 0.0;
    LocalizationStatus status = LocalizationStatus::numerical_failure;
    double primal_res = 0.0;
    double dual_res = 0.0;
    double rel_gap = 0.0;
    int iterations = 0;
    double solve_seconds = 0.0;

    /// Smallest eigenvalue of [[Y_hat, y_hat], [y_hat', 1]].
    double psd_min_eigenvalue() const;
};

/// Builds the penalized relaxation for a TDoA scenario. `weights`, when
/// present, are the per-row values w_k; the objective uses w_k^2 in both
/// the quadratic and linear terms. Throws UnsupportedScenarioError on
/// non-TDoA rows, ValidationError on malformed input.
ConicProblem assemble_relaxation(const AnchorSet& anchors, const RangingScenario& scenario,
                                 const Vector& d, double delta,
                                 const std::optional<Vector>& weights = std::nullopt);

/// Runs the interior-point method on an assembled problem and extracts the
/// localization variables. x_hat is read directly from the x block.
LocalizationSolution solve_conic(const ConicProblem& problem,
                                 const SolverSettings& settings = {});

/// assemble_relaxation + solve_conic; on a non-optimal exit the estimate is
/// polished with a damped Gauss-Newton refinement of the raw objective and
/// the better of the two points is returned (status stays flagged).
LocalizationSolution localize(const AnchorSet& anchors, const RangingScenario& scenario,
                              const Vector& d, double delta = kDefaultDelta,
                              const std::optional<Vector>& weights = std::nullopt,
                              const SolverSettings& settings = {});

/// MLE row weights 1/|d_k| with |d_k| clamped below at 1e-3 * anchor span.
Vector mle_weights(const Vector& d, double anchor_span);

/// Raw nonconvex objective sum_k (sum_i omega ||x-a_i|| - d_k)^2.
double raw_objective(const AnchorSet& anchors, const RangingScenario& scenario,
                     const Vector& d, const Point& x);

/// Single damped Gauss-Newton (Levenberg-Marquardt) descent of the raw
/// objective from x0, run to gradient norm < 1e-10 or the iteration cap.
Point nls_refine(const AnchorSet& anchors, const RangingScenario& scenario,
                 const Vector& d, const Point& x0);

/// Multi-start refinement: `starts` initial points uniform in the cube
/// [-box_halfwidth, box_halfwidth]^dim, each refined; best raw-objective
/// minimizer returned. Throws Error if every start fails to produce a
/// finite refined point.
Point nls_oracle(const AnchorSet& anchors, const RangingScenario& scenario,
                 const Vector& d, int starts, std::mt19937_64& rng,
                 double box_halfwidth);

/// Feasible lift of a position: y_i = ||x - a_i||, gamma = ||x||^2,
/// Y_ij = y_i y_j raised to the absolute-value floor where needed.
/// Returns the full variable vector of `problem`.
Vector lift_point(const ConicProblem& problem, const AnchorSet& anchors, const Point& x);

/// Largest constraint violation of a variable vector against the problem:
/// max of equality residuals, inequality shortfalls, SOC shortfalls and
/// the negative part of the PSD block's smallest eigenvalue.
double max_constraint_violation(const ConicProblem& problem, const Vector& v);

/// Objective value c'v of the assembled program at a variable vector.
double relaxation_objective(const ConicProblem& problem, const Vector& v);

}  // namespace qtdoa

#endif  // QTDOA_SOLVER_HPP
