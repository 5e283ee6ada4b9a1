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

#ifndef QTDOA_CONIC_HPP
#define QTDOA_CONIC_HPP

#include <vector>

#include "qtdoa/core.hpp"

namespace qtdoa::conic {

// Dense primal-dual path-following solver for the standard-form problem
//
//     minimize    c'v
//     subject to  A v = b
//                 G v + s = h,   s in K
//
// over a composite cone K made of a nonnegative orthant, second-order cones
// and semidefinite blocks (stored in scaled symmetric vectorization).
// Nesterov-Todd scaling on every block, Mehrotra predictor-corrector steps,
// dense Cholesky of the reduced KKT system with iterative refinement.

/// Composite cone layout. Slack order: nonneg block, then SOC blocks in
/// order, then svec'd PSD blocks in order.
struct ConeSpec {
    int nonneg = 0;            // dimension of the nonnegative orthant
    std::vector<int> soc;      // second-order cone dimensions (each >= 2)
    std::vector<int> psd;      // semidefinite block orders (each >= 1)

    int total_dim() const;     // slack vector length
    int degree() const;        // barrier degree nu
    void validate() const;
};

struct Program {
    Vector c;
    Matrix A;   // p x N, may have zero rows
    Vector b;
    Matrix G;   // cone_dim x N
    Vector h;
    ConeSpec cones;

    void validate() const;
};

enum class SolveStatus {
    optimal,            // residuals and gap within tolerances
    max_iters,          // iteration budget exhausted; best iterate returned
    numerical_failure,  // scaling or factorization breakdown; best iterate returned
};

struct Settings {
    double tol_gap = 1e-8;        // relative duality-gap tolerance
    double tol_feas = 1e-8;       // primal/dual residual tolerance
    int max_iters = 200;
    double step_fraction = 0.99;  // fraction of the step to the cone boundary

    void validate() const;
};

struct Result {
    Vector v;      // primal variables
    Vector s;      // cone slacks
    Vector z;      // cone duals
    Vector y_eq;   // equality duals
    SolveStatus status = SolveStatus::numerical_failure;
    double primal_res = 0.0;  // see solve() for the residual definitions
    double dual_res = 0.0;
    double rel_gap = 0.0;
    double mu = 0.0;          // final complementarity measure <s,z>/nu
    int iterations = 0;
};

/// Solves the program. Residuals reported (and tested against tolerances):
///   primal_res = max(||Av-b||, ||Gv+s-h||) / max(1, ||b||, ||h||)
///   dual_res   = ||A'y + G'z + c|| / max(1, ||c||)
///   rel_gap    = <s,z> / max(1, |c'v|)
Result solve(const Program& prog, const Settings& settings = {});

// --- scaled symmetric vectorization -----------------------------------
// svec stacks the lower triangle column by column with off-diagonal
// entries scaled by sqrt(2), so <svec(U), svec(V)> = Tr(UV).

int svec_dim(int order);
Vector svec(const Matrix& symmetric);
Matrix smat(const Vector& packed);

/// Index of entry (i, j), i >= j, within svec of an order-p matrix.
int svec_index(int i, int j, int order);

}  // namespace qtdoa::conic

#endif  // QTDOA_CONIC_HPP
