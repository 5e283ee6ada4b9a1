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

#include "qtdoa/conic.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

// LAPACK symmetric-indefinite factorization, used for the full KKT system
// once the reduced solve's refinement stops contracting near convergence.
extern "C" {
void dsytrf_(const char* uplo, const int* n, double* a, const int* lda, int* ipiv,
             double* work, const int* lwork, int* info);
void dsytrs_(const char* uplo, const int* n, const int* nrhs, const double* a,
             const int* lda, const int* ipiv, double* b, const int* ldb, int* info);
void openblas_set_num_threads(int) __attribute__((weak));
}

namespace qtdoa::conic {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInf = std::numeric_limits<double>::infinity();

// The reduced KKT systems are factored and backsolved in extended precision:
// near convergence their conditioning grows like 1/mu^2 and plain double
// Cholesky corrections stop contracting right at the feasibility tolerance.
using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

// Callers parallelize across solves; nested BLAS threading would
// oversubscribe and make timings erratic.
struct BlasSingleThread {
    BlasSingleThread() {
        if (openblas_set_num_threads != nullptr) openblas_set_num_threads(1);
    }
};
const BlasSingleThread blas_single_thread;

}  // namespace

int svec_dim(int order) { return order * (order + 1) / 2; }

int svec_index(int i, int j, int order) {
    if (i < j) std::swap(i, j);
    return j * order - j * (j - 1) / 2 + (i - j);
}

Vector svec(const Matrix& symmetric) {
    const int p = static_cast<int>(symmetric.rows());
    Vector out(svec_dim(p));
    int idx = 0;
    for (int j = 0; j < p; ++j) {
        out[idx++] = symmetric(j, j);
        for (int i = j + 1; i < p; ++i) {
            out[idx++] = kSqrt2 * symmetric(i, j);
        }
    }
    return out;
}

Matrix smat(const Vector& packed) {
    const int len = static_cast<int>(packed.size());
    const int p = static_cast<int>(std::round((std::sqrt(8.0 * len + 1.0) - 1.0) / 2.0));
    if (svec_dim(p) != len) {
        throw ValidationError("packed vector length is not a triangular number");
    }
    Matrix out(p, p);
    int idx = 0;
    for (int j = 0; j < p; ++j) {
        out(j, j) = packed[idx++];
        for (int i = j + 1; i < p; ++i) {
            out(i, j) = out(j, i) = packed[idx++] / kSqrt2;
        }
    }
    return out;
}

int ConeSpec::total_dim() const {
    int dim = nonneg;
    for (int q : soc) dim += q;
    for (int p : psd) dim += svec_dim(p);
    return dim;
}

int ConeSpec::degree() const {
    int deg = nonneg + static_cast<int>(soc.size());
    for (int p : psd) deg += p;
    return deg;
}

void ConeSpec::validate() const {
    if (nonneg < 0) throw ValidationError("negative orthant dimension");
    for (int q : soc) {
        if (q < 2) throw ValidationError("second-order cone dimension must be >= 2");
    }
    for (int p : psd) {
        if (p < 1) throw ValidationError("semidefinite block order must be >= 1");
    }
    if (total_dim() < 1) throw ValidationError("cone specification is empty");
}

void Program::validate() const {
    cones.validate();
    const auto n = c.size();
    if (G.cols() != n || (A.size() > 0 && A.cols() != n)) {
        throw ValidationError("constraint matrices disagree with variable count");
    }
    if (A.rows() != b.size()) throw ValidationError("A/b row mismatch");
    if (G.rows() != h.size() || G.rows() != cones.total_dim()) {
        throw ValidationError("G/h rows disagree with cone dimension");
    }
    if (!c.allFinite() || !b.allFinite() || !h.allFinite() || !A.allFinite() || !G.allFinite()) {
        throw ValidationError("program data must be finite");
    }
}

void Settings::validate() const {
    if (!(tol_gap > 0.0) || !(tol_feas > 0.0)) throw ValidationError("tolerances must be positive");
    if (max_iters < 1) throw ValidationError("max_iters must be >= 1");
    if (!(step_fraction > 0.0 && step_fraction < 1.0)) {
        throw ValidationError("step fraction must lie in (0, 1)");
    }
}

namespace {

// ---------------------------------------------------------------------
// Composite-cone kernel: block layout, Nesterov-Todd scaling, Jordan
// algebra operations and boundary step lengths.
// ---------------------------------------------------------------------

struct Block {
    enum class Kind { nonneg, soc, psd } kind;
    int offset;  // start within the slack vector
    int size;    // slack entries
    int order;   // matrix order for psd blocks, cone dim for soc
};

struct SocScaling {
    double eta = 1.0;  // (s-residual / z-residual)^(1/4)
    double a = 1.0;    // scaling point head
    Vector q;          // scaling point tail; a^2 - ||q||^2 = 1
};

struct PsdScaling {
    Matrix r;    // W z  = svec(r' Z r)
    Matrix rti;  // r^{-T}; W^{-T} s = svec(rti' S rti)
};

struct Scaling {
    Eigen::ArrayXd w_nonneg;  // sqrt(s/z) elementwise
    std::vector<SocScaling> soc;
    std::vector<PsdScaling> psd;
    Vector lambda;  // scaled point, diagonal on psd blocks
};

class ConeOps {
   public:
    explicit ConeOps(const ConeSpec& spec) {
        int off = 0;
        if (spec.nonneg > 0) {
            blocks_.push_back({Block::Kind::nonneg, off, spec.nonneg, spec.nonneg});
            off += spec.nonneg;
        }
        for (int q : spec.soc) {
            blocks_.push_back({Block::Kind::soc, off, q, q});
            off += q;
        }
        for (int p : spec.psd) {
            blocks_.push_back({Block::Kind::psd, off, svec_dim(p), p});
            off += svec_dim(p);
        }
        dim_ = off;
        degree_ = spec.degree();
    }

    int dim() const { return dim_; }
    int degree() const { return degree_; }

    Vector identity() const {
        Vector e = Vector::Zero(dim_);
        for (const Block& blk : blocks_) {
            switch (blk.kind) {
                case Block::Kind::nonneg:
                    e.segment(blk.offset, blk.size).setOnes();
                    break;
                case Block::Kind::soc:
                    e[blk.offset] = 1.0;
                    break;
                case Block::Kind::psd:
                    for (int i = 0; i < blk.order; ++i) {
                        e[blk.offset + svec_index(i, i, blk.order)] = 1.0;
                    }
                    break;
            }
        }
        return e;
    }

    /// Largest amount by which u sits outside the cone: max over blocks of
    /// the most negative spectral value. Negative result = strictly interior.
    double outside_margin(const Vector& u) const {
        double margin = -kInf;
        for (const Block& blk : blocks_) {
            switch (blk.kind) {
                case Block::Kind::nonneg:
                    margin = std::max(margin, -u.segment(blk.offset, blk.size).minCoeff());
                    break;
                case Block::Kind::soc:
                    margin = std::max(margin, u.segment(blk.offset + 1, blk.size - 1).norm() -
                                                  u[blk.offset]);
                    break;
                case Block::Kind::psd: {
                    const Matrix m = smat(u.segment(blk.offset, blk.size));
                    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
                    margin = std::max(margin, -eig.eigenvalues().minCoeff());
                    break;
                }
            }
        }
        return margin;
    }

    /// Computes the NT scaling for an interior pair (s, z) and the scaled
    /// point lambda = W z = W^{-T} s. Returns false on breakdown.
    bool update_scaling(const Vector& s, const Vector& z, Scaling& w) const {
        w.soc.clear();
        w.psd.clear();
        w.lambda.resize(dim_);
        for (const Block& blk : blocks_) {
            switch (blk.kind) {
                case Block::Kind::nonneg: {
                    const auto sb = s.segment(blk.offset, blk.size).array();
                    const auto zb = z.segment(blk.offset, blk.size).array();
                    if ((sb <= 0.0).any() || (zb <= 0.0).any()) return false;
                    w.w_nonneg = (sb / zb).sqrt();
                    w.lambda.segment(blk.offset, blk.size) = (sb * zb).sqrt().matrix();
                    break;
                }
                case Block::Kind::soc: {
                    const auto sb = s.segment(blk.offset, blk.size);
                    const auto zb = z.segment(blk.offset, blk.size);
                    const double sres =
                        sb[0] * sb[0] - sb.tail(blk.size - 1).squaredNorm();
                    const double zres =
                        zb[0] * zb[0] - zb.tail(blk.size - 1).squaredNorm();
                    if (!(sres > 0.0) || !(zres > 0.0)) return false;
                    const double snorm = std::sqrt(sres);
                    const double znorm = std::sqrt(zres);
                    const Vector sbar = sb / snorm;
                    const Vector zbar = zb / znorm;
                    const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
                    SocScaling sc;
                    sc.eta = std::sqrt(snorm / znorm);
                    sc.a = (0.5 / gamma) * (sbar[0] + zbar[0]);
                    sc.q = (0.5 / gamma) * (sbar.tail(blk.size - 1) - zbar.tail(blk.size - 1));
                    // lambda = W z for this block
                    const double zeta = sc.q.dot(zb.tail(blk.size - 1));
                    w.lambda[blk.offset] = sc.eta * (sc.a * zb[0] + zeta);
                    w.lambda.segment(blk.offset + 1, blk.size - 1) =
                        sc.eta *
                        (zb.tail(blk.size - 1) + (zb[0] + zeta / (1.0 + sc.a)) * sc.q);
                    w.soc.push_back(std::move(sc));
                    break;
                }
                case Block::Kind::psd: {
                    const Matrix sm = smat(s.segment(blk.offset, blk.size));
                    const Matrix zm = smat(z.segment(blk.offset, blk.size));
                    Eigen::LLT<Matrix> ls(sm);
                    Eigen::LLT<Matrix> lz(zm);
                    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
                    const Matrix lsm = ls.matrixL();
                    const Matrix lzm = lz.matrixL();
                    Eigen::JacobiSVD<Matrix> svd(lzm.transpose() * lsm,
                                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
                    const Vector sing = svd.singularValues();
                    if (!(sing.minCoeff() > 0.0)) return false;
                    const Vector inv_sqrt = sing.array().sqrt().inverse().matrix();
                    PsdScaling ps;
                    ps.r = lsm * svd.matrixV() * inv_sqrt.asDiagonal();
                    ps.rti = lzm * svd.matrixU() * inv_sqrt.asDiagonal();
                    Vector lam = Vector::Zero(blk.size);
                    for (int i = 0; i < blk.order; ++i) {
                        lam[svec_index(i, i, blk.order)] = sing[i];
                    }
                    w.lambda.segment(blk.offset, blk.size) = lam;
                    w.psd.push_back(std::move(ps));
                    break;
                }
            }
        }
        return true;
    }

    enum class Op { w, wt, winv, winvt };

    /// out = W u / W' u / W^{-1} u / W^{-T} u depending on op.
    void apply(const Scaling& w, Op op, const Vector& u, Vector& out) const {
        apply_impl<double>(w, op, u, out);
    }

    /// Same in extended precision. Used on the once-per-iteration step
    /// unscalings, where double rounding amplified by the scaling condition
    /// number would re-pollute residuals the refinement just removed.
    void apply_ext(const Scaling& w, Op op, const Vector& u, Vector& out) const {
        apply_impl<long double>(w, op, u, out);
    }

    /// out = u o v (Jordan product per block).
    void jordan_product(const Vector& u, const Vector& v, Vector& out) const {
        out.resize(dim_);
        for (const Block& blk : blocks_) {
            switch (blk.kind) {
                case Block::Kind::nonneg:
                    out.segment(blk.offset, blk.size) =
                        u.segment(blk.offset, blk.size).cwiseProduct(v.segment(blk.offset, blk.size));
                    break;
                case Block::Kind::soc: {
                    const auto ub = u.segment(blk.offset, blk.size);
                    const auto vb = v.segment(blk.offset, blk.size);
                    out[blk.offset] = ub.dot(vb);
                    out.segment(blk.offset + 1, blk.size - 1) =
                        ub[0] * vb.tail(blk.size - 1) + vb[0] * ub.tail(blk.size - 1);
                    break;
                }
                case Block::Kind::psd: {
                    const Matrix um = smat(u.segment(blk.offset, blk.size));
                    const Matrix vm = smat(v.segment(blk.offset, blk.size));
                    out.segment(blk.offset, blk.size) =
                        svec(0.5 * (um * vm + vm * um));
                    break;
                }
            }
        }
    }

    /// Solves lam o x = rhs for x. Requires lam to be an NT scaled point
    /// (positive entries; diagonal psd blocks).
    void jordan_solve(const Vector& lam, const Vector& rhs, Vector& out) const {
        out.resize(dim_);
        for (const Block& blk : blocks_) {
            switch (blk.kind) {
                case Block::Kind::nonneg:
                    out.segment(blk.offset, blk.size) =
                        rhs.segment(blk.offset, blk.size)
                            .cwiseQuotient(lam.segment(blk.offset, blk.size));
                    break;
                case Block::Kind::soc: {
                    const auto lb = lam.segment(blk.offset, blk.size);
                    const auto rb = rhs.segment(blk.offset, blk.size);
                    const double det = lb[0] * lb[0] - lb.tail(blk.size - 1).squaredNorm();
                    const double x0 =
                        (lb[0] * rb[0] - lb.tail(blk.size - 1).dot(rb.tail(blk.size - 1))) / det;
                    out[blk.offset] = x0;
                    out.segment(blk.offset + 1, blk.size - 1) =
                        (rb.tail(blk.size - 1) - x0 * lb.tail(blk.size - 1)) / lb[0];
                    break;
                }
                case Block::Kind::psd: {
                    const Matrix rm = smat(rhs.segment(blk.offset, blk.size));
                    Matrix xm(blk.order, blk.order);
                    for (int j = 0; j < blk.order; ++j) {
                        const double lj = lam[blk.offset + svec_index(j, j, blk.order)];
                        for (int i = j; i < blk.order; ++i) {
                            const double li = lam[blk.offset + svec_index(i, i, blk.order)];
                            xm(i, j) = xm(j, i) = 2.0 * rm(i, j) / (li + lj);
                        }
                    }
                    out.segment(blk.offset, blk.size) = svec(xm);
                    break;
                }
            }
        }
    }

    /// Largest normalized decrease rate of lam + alpha*du along du: the step
    /// to the cone boundary is 1/t for the returned t when t > 0, unbounded
    /// otherwise. Requires lam to be an NT scaled point.
    double max_decrease_rate(const Vector& lam, const Vector& du) const {
        double rate = -kInf;
        for (const Block& blk : blocks_) {
            switch (blk.kind) {
                case Block::Kind::nonneg: {
                    const auto lb = lam.segment(blk.offset, blk.size).array();
                    const auto db = du.segment(blk.offset, blk.size).array();
                    rate = std::max(rate, (-db / lb).maxCoeff());
                    break;
                }
                case Block::Kind::soc: {
                    const auto lb = lam.segment(blk.offset, blk.size);
                    const auto db = du.segment(blk.offset, blk.size);
                    const double lres =
                        std::sqrt(lb[0] * lb[0] - lb.tail(blk.size - 1).squaredNorm());
                    const Vector lbar = lb / lres;
                    const double rho0 =
                        lbar[0] * db[0] - lbar.tail(blk.size - 1).dot(db.tail(blk.size - 1));
                    const Vector rho1 =
                        db.tail(blk.size - 1) -
                        (db[0] + rho0) / (1.0 + lbar[0]) * lbar.tail(blk.size - 1);
                    rate = std::max(rate, (rho1.norm() - rho0) / lres);
                    break;
                }
                case Block::Kind::psd: {
                    Vector inv_sqrt(blk.order);
                    for (int i = 0; i < blk.order; ++i) {
                        inv_sqrt[i] =
                            1.0 / std::sqrt(lam[blk.offset + svec_index(i, i, blk.order)]);
                    }
                    Matrix dm = smat(du.segment(blk.offset, blk.size));
                    dm = inv_sqrt.asDiagonal() * dm * inv_sqrt.asDiagonal();
                    Eigen::SelfAdjointEigenSolver<Matrix> eig(dm, Eigen::EigenvaluesOnly);
                    rate = std::max(rate, -eig.eigenvalues().minCoeff());
                    break;
                }
            }
        }
        return rate;
    }

   private:
    template <typename Real>
    void apply_impl(const Scaling& w, Op op, const Vector& u, Vector& out) const {
        using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
        using RMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
        out.resize(dim_);
        int soc_idx = 0;
        int psd_idx = 0;
        for (const Block& blk : blocks_) {
            switch (blk.kind) {
                case Block::Kind::nonneg: {
                    const RVector ub =
                        u.segment(blk.offset, blk.size).template cast<Real>();
                    const RVector wb = w.w_nonneg.matrix().template cast<Real>();
                    RVector res;
                    if (op == Op::w || op == Op::wt) {
                        res = ub.cwiseProduct(wb);
                    } else {
                        res = ub.cwiseQuotient(wb);
                    }
                    out.segment(blk.offset, blk.size) = res.template cast<double>();
                    break;
                }
                case Block::Kind::soc: {
                    const SocScaling& sc = w.soc[soc_idx++];
                    const RVector ub =
                        u.segment(blk.offset, blk.size).template cast<Real>();
                    const RVector q = sc.q.template cast<Real>();
                    const Real a = static_cast<Real>(sc.a);
                    const Real eta = static_cast<Real>(sc.eta);
                    const RVector tail = ub.tail(blk.size - 1);
                    const Real zeta = q.dot(tail);
                    Real head;
                    RVector rest;
                    if (op == Op::w || op == Op::wt) {  // symmetric
                        head = eta * (a * ub[0] + zeta);
                        rest = eta * (tail + (ub[0] + zeta / (Real(1) + a)) * q);
                    } else {
                        head = (a * ub[0] - zeta) / eta;
                        rest = (tail + (-ub[0] + zeta / (Real(1) + a)) * q) / eta;
                    }
                    out[blk.offset] = static_cast<double>(head);
                    out.segment(blk.offset + 1, blk.size - 1) =
                        rest.template cast<double>();
                    break;
                }
                case Block::Kind::psd: {
                    const PsdScaling& ps = w.psd[psd_idx++];
                    RMatrix um =
                        smat(u.segment(blk.offset, blk.size)).template cast<Real>();
                    const RMatrix r = ps.r.template cast<Real>();
                    const RMatrix rti = ps.rti.template cast<Real>();
                    RMatrix res;
                    switch (op) {
                        case Op::w:
                            res = r.transpose() * um * r;
                            break;
                        case Op::wt:
                            res = r * um * r.transpose();
                            break;
                        case Op::winv:
                            res = rti * um * rti.transpose();
                            break;
                        case Op::winvt:
                            res = rti.transpose() * um * rti;
                            break;
                    }
                    // Symmetrize against roundoff drift.
                    res = Real(0.5) * (res + res.transpose()).eval();
                    const Real sq2 = std::sqrt(Real(2));
                    Vector sv(blk.size);
                    for (int j = 0; j < blk.order; ++j) {
                        for (int i = j; i < blk.order; ++i) {
                            const Real scale = (i == j) ? Real(1) : sq2;
                            sv[svec_index(i, j, blk.order)] =
                                static_cast<double>(scale * res(i, j));
                        }
                    }
                    out.segment(blk.offset, blk.size) = sv;
                    break;
                }
            }
        }
    }

    std::vector<Block> blocks_;
    int dim_ = 0;
    int degree_ = 0;
};

// ---------------------------------------------------------------------
// Interior-point iteration
// ---------------------------------------------------------------------

class Ipm {
   public:
    Ipm(const Program& prog, const Settings& settings)
        : prog_(prog),
          st_(settings),
          cones_(prog.cones),
          nvar_(static_cast<int>(prog.c.size())),
          neq_(static_cast<int>(prog.A.rows())),
          ncone_(cones_.dim()) {
        res_norm_p_ = std::max({1.0, prog_.b.norm(), prog_.h.norm()});
        res_norm_d_ = std::max(1.0, prog_.c.norm());
    }

    Result run() {
        prog_.validate();
        st_.validate();

        const Vector e = cones_.identity();

        // Identity scaling for the initialization solves.
        if (!cones_.update_scaling(e, e, w_)) {
            return fail_result();
        }
        if (!factorize()) {
            return fail_result();
        }

        Vector dv(nvar_), dy(neq_), dz(ncone_);

        // Least-squares primal start: minimize the slack norm subject to the
        // equalities, then shift the slack into the interior.
        kkt_solve(Vector::Zero(nvar_), prog_.b, prog_.h, dv, dy, dz);
        v_ = dv;
        s_ = -dz;
        shift_interior(s_, e);

        // Least-squares dual start.
        kkt_solve(-prog_.c, Vector::Zero(neq_), Vector::Zero(ncone_), dv, dy, dz);
        y_ = dy;
        z_ = dz;
        shift_interior(z_, e);

        Result best = snapshot(SolveStatus::max_iters);
        double best_merit = merit(best);

        Vector rx(nvar_), ry(neq_), rz(ncone_), wirz(ncone_);
        Vector lam_sq(ncone_), dcompl(ncone_), vsol(ncone_), rhs3(ncone_);
        Vector ds_scaled(ncone_), ds(ncone_), dz_unscaled(ncone_);

        int iter = 0;
        SolveStatus status = SolveStatus::max_iters;
        for (;; ++iter) {
            // Residuals and convergence test.
            rx = prog_.G.transpose() * z_ + prog_.c;
            if (neq_ > 0) rx.noalias() += prog_.A.transpose() * y_;
            ry = neq_ > 0 ? Vector(prog_.A * v_ - prog_.b) : Vector(0);
            rz = prog_.G * v_ + s_ - prog_.h;

            const double gap = s_.dot(z_);
            const double pcost = prog_.c.dot(v_);
            pres_ = std::max(neq_ > 0 ? ry.norm() : 0.0, rz.norm()) / res_norm_p_;
            dres_ = rx.norm() / res_norm_d_;
            relgap_ = gap / std::max(1.0, std::abs(pcost));
            mu_ = gap / cones_.degree();

            if (pres_ <= st_.tol_feas && dres_ <= st_.tol_feas &&
                (relgap_ <= st_.tol_gap || gap <= st_.tol_gap)) {
                status = SolveStatus::optimal;
                break;
            }
            {
                Result cur = snapshot(SolveStatus::max_iters);
                cur.iterations = iter;
                const double m = merit(cur);
                if (m < best_merit) {
                    best_merit = m;
                    best = cur;
                }
            }
            if (iter >= st_.max_iters) {
                status = SolveStatus::max_iters;
                break;
            }

            if (std::getenv("QTDOA_IPM_TRACE")) {
                std::fprintf(stderr, "it %2d pres %9.2e dres %9.2e relgap %9.2e mu %9.2e\n",
                             iter, pres_, dres_, relgap_, mu_);
            }
            if (!cones_.update_scaling(s_, z_, w_)) {
                if (std::getenv("QTDOA_IPM_TRACE")) std::fprintf(stderr, "  scaling breakdown\n");
                status = SolveStatus::numerical_failure;
                break;
            }
            if (!factorize()) {
                if (std::getenv("QTDOA_IPM_TRACE")) std::fprintf(stderr, "  factorize breakdown\n");
                status = SolveStatus::numerical_failure;
                break;
            }
            const Vector& lam = w_.lambda;

            // Predictor (affine scaling) direction; dz comes back scaled.
            cones_.jordan_product(lam, lam, lam_sq);
            cones_.apply_ext(w_, ConeOps::Op::winvt, rz, wirz);
            rhs3 = lam - wirz;
            kkt_solve(-rx, -ry, rhs3, dv, dy, dz);
            ds_scaled = -lam - dz;

            const double t_aff = std::max(cones_.max_decrease_rate(lam, ds_scaled),
                                          cones_.max_decrease_rate(lam, dz));
            const double alpha_aff = t_aff <= 0.0 ? 1.0 : std::min(1.0, 1.0 / t_aff);
            const double gap_aff = gap + alpha_aff * (lam.dot(dz) + lam.dot(ds_scaled)) +
                                   alpha_aff * alpha_aff * ds_scaled.dot(dz);
            const double sigma =
                std::clamp(std::pow(std::max(0.0, gap_aff) / gap, 3.0), 0.0, 1.0);

            // Corrector: recentre and compensate the second-order term.
            cones_.jordan_product(ds_scaled, dz, dcompl);
            dcompl = -lam_sq - dcompl + sigma * mu_ * e;
            cones_.jordan_solve(lam, dcompl, vsol);
            rhs3 = -wirz - vsol;
            kkt_solve(-rx, -ry, rhs3, dv, dy, dz);
            ds_scaled = vsol - dz;

            const double t = std::max(cones_.max_decrease_rate(lam, ds_scaled),
                                      cones_.max_decrease_rate(lam, dz));
            double alpha = t <= 0.0 ? 1.0 : std::min(1.0, st_.step_fraction / t);

            // Once feasibility holds, land the gap inside the tolerance
            // window instead of overshooting it. Every extra step injects
            // roundoff that grows as the scaling degenerates.
            if (pres_ <= st_.tol_feas && dres_ <= st_.tol_feas) {
                const double target =
                    0.5 * st_.tol_gap * std::max(1.0, std::abs(pcost));
                const double lin = lam.dot(dz) + lam.dot(ds_scaled);
                const double quad = ds_scaled.dot(dz);
                const double drop = gap - target;
                double root = -1.0;
                if (drop > 0.0) {
                    const double disc = lin * lin - 4.0 * quad * drop;
                    if (std::abs(quad) * alpha * alpha < 1e-12 * drop) {
                        if (lin < 0.0) root = drop / -lin;
                    } else if (disc >= 0.0) {
                        const double sd = std::sqrt(disc);
                        const double q = -0.5 * (lin + (lin >= 0.0 ? sd : -sd));
                        for (double cand : {q / quad, drop / q}) {
                            if (cand > 0.0 && (root < 0.0 || cand < root)) root = cand;
                        }
                    }
                }
                if (root > 0.0 && root < alpha) alpha = root;
            }

            // Unscaled Newton row 3 gives ds directly from the pristine G;
            // forming W'(ds scaled) instead would amplify the rounding in Gs
            // by the scaling's condition number and poison the next rz.
            ds = -rz - prog_.G * dv;
            cones_.apply_ext(w_, ConeOps::Op::winv, dz, dz_unscaled);
            v_ += alpha * dv;
            if (neq_ > 0) y_ += alpha * dy;
            z_ += alpha * dz_unscaled;
            s_ += alpha * ds;

            if (!v_.allFinite() || !s_.allFinite() || !z_.allFinite()) {
                status = SolveStatus::numerical_failure;
                break;
            }
        }

        Result out = snapshot(status);
        out.iterations = iter;
        if (status != SolveStatus::optimal && best_merit < merit(out)) {
            // Return the best iterate seen rather than the last one.
            best.status = status;
            return best;
        }
        return out;
    }

   private:
    double merit(const Result& r) const {
        return std::max({r.primal_res, r.dual_res, r.rel_gap});
    }

    Result snapshot(SolveStatus status) const {
        Result r;
        r.v = v_;
        r.s = s_;
        r.z = z_;
        r.y_eq = y_;
        r.status = status;
        r.primal_res = pres_;
        r.dual_res = dres_;
        r.rel_gap = relgap_;
        r.mu = mu_;
        return r;
    }

    Result fail_result() const {
        Result r;
        r.v = Vector::Zero(nvar_);
        r.s = Vector::Zero(ncone_);
        r.z = Vector::Zero(ncone_);
        r.y_eq = Vector::Zero(neq_);
        r.status = SolveStatus::numerical_failure;
        r.primal_res = r.dual_res = r.rel_gap = kInf;
        return r;
    }

    void shift_interior(Vector& u, const Vector& e) const {
        const double t = cones_.outside_margin(u);
        if (t >= -1e-8 * std::max(1.0, u.norm())) {
            u += (1.0 + t) * e;
        }
    }

    /// Builds the scaled-constraint Gram factorization for the current W:
    ///   H = (W^{-T}G)'(W^{-T}G),   S = A H^{-1} A'.
    bool factorize() {
        gs_.resize(ncone_, nvar_);
        Vector col(ncone_), scaled(ncone_);
        for (int j = 0; j < nvar_; ++j) {
            col = prog_.G.col(j);
            cones_.apply(w_, ConeOps::Op::winvt, col, scaled);
            gs_.col(j) = scaled;
        }
        if (full_kkt_) return factor_full();
        Matrix hmat(nvar_, nvar_);
        hmat.setZero();
        hmat.selfadjointView<Eigen::Lower>().rankUpdate(gs_.transpose());
        hmat = hmat.selfadjointView<Eigen::Lower>();
        if (a_long_.rows() != neq_) a_long_ = prog_.A.cast<long double>();
        double reg = 0.0;
        for (int attempt = 0; attempt < 4; ++attempt) {
            LongMatrix hreg = hmat.cast<long double>();
            if (reg > 0.0) hreg.diagonal().array() += static_cast<long double>(reg);
            llt_h_.compute(hreg);
            if (llt_h_.info() == Eigen::Success) {
                if (neq_ == 0) return true;
                LongMatrix schur = a_long_ * llt_h_.solve(a_long_.transpose());
                if (reg > 0.0) schur.diagonal().array() += static_cast<long double>(reg);
                llt_s_.compute(schur);
                if (llt_s_.info() == Eigen::Success) return true;
            }
            reg = reg == 0.0 ? 1e-12 * std::max(1.0, hmat.diagonal().maxCoeff()) : reg * 100.0;
        }
        full_kkt_ = true;
        return factor_full();
    }

    /// Factors the full KKT matrix with Bunch-Kaufman pivoting. Slower than
    /// the reduced path but its conditioning grows only linearly with the
    /// scaling spread instead of quadratically.
    bool factor_full() {
        const int m = nvar_ + neq_ + ncone_;
        kfull_.setZero(m, m);
        if (neq_ > 0) kfull_.block(nvar_, 0, neq_, nvar_) = prog_.A;
        kfull_.block(nvar_ + neq_, 0, ncone_, nvar_) = gs_;
        kfull_.diagonal().tail(ncone_).setConstant(-1.0);
        kipiv_.resize(m);
        int info = 0;
        int lwork = -1;
        double wkopt = 0.0;
        dsytrf_("L", &m, kfull_.data(), &m, kipiv_.data(), &wkopt, &lwork, &info);
        if (info != 0) return false;
        lwork = static_cast<int>(wkopt);
        kwork_.resize(std::max(lwork, 1));
        dsytrf_("L", &m, kfull_.data(), &m, kipiv_.data(), kwork_.data(), &lwork,
                &info);
        return info == 0;
    }

    /// Solves the KKT system in the scaled-slack form
    ///   [0   A'  Gs'] [dv ]   [r1 ]
    ///   [A   0   0  ] [dy ] = [r2 ]
    ///   [Gs  0  -I  ] [dzs]   [r3s]
    /// where Gs = W^{-T}G and dzs = W dz. Row 3 holds exactly by
    /// construction, and rows 1 and 2 reuse Gs, so iterative refinement
    /// converges without any operator mismatch from re-applying the
    /// ill-conditioned scaling.
    void kkt_solve(const Vector& r1, const Vector& r2, const Vector& r3s, Vector& dv,
                   Vector& dy, Vector& dzs) {
        dv.setZero(nvar_);
        dy.setZero(neq_);
        dzs.setZero(ncone_);
        double best = refine(r1, r2, r3s, dv, dy, dzs);
        // The reduced solve squares the scaling's condition number, so its
        // refinement stalls near convergence. Redo the step against the full
        // KKT matrix from then on, reusing the stalled iterate as the guess.
        if (best > 1e-12 && !full_kkt_ && factor_full()) {
            full_kkt_ = true;
            refine(r1, r2, r3s, dv, dy, dzs);
        }
    }

    /// Iterative refinement from the incoming guess; keeps the best iterate.
    /// Returns the best residual relative to the right-hand side scale.
    double refine(const Vector& r1, const Vector& r2, const Vector& r3s, Vector& dv,
                  Vector& dy, Vector& dzs) const {
        const double rhs_scale =
            std::max({1.0, r1.norm(), neq_ > 0 ? r2.norm() : 0.0, r3s.norm()});
        Vector c1(nvar_), c2(neq_), c3(ncone_);
        Vector ev(nvar_), ey(neq_), ez(ncone_);
        Vector bv = dv, by = dy, bz = dzs;
        double best = kInf;
        for (int pass = 0;; ++pass) {
            c1 = r1 - gs_.transpose() * dzs;
            if (neq_ > 0) {
                c1.noalias() -= prog_.A.transpose() * dy;
                c2 = r2 - prog_.A * dv;
            }
            c3 = r3s - (gs_ * dv - dzs);
            const double res =
                std::max({c1.norm(), neq_ > 0 ? c2.norm() : 0.0, c3.norm()}) / rhs_scale;
            if (res < best) {
                best = res;
                bv = dv;
                by = dy;
                bz = dzs;
            } else if (pass > 0) {
                break;  // no longer contracting
            }
            if (res <= 1e-14 || pass >= 10) break;
            if (full_kkt_) {
                solve_full(c1, c2, c3, ev, ey, ez);
            } else {
                solve_scaled(c1, c2, c3, ev, ey, ez);
            }
            dv += ev;
            if (neq_ > 0) dy += ey;
            dzs += ez;
        }
        dv = bv;
        if (neq_ > 0) dy = by;
        dzs = bz;
        return best;
    }

    void solve_scaled(const Vector& r1, const Vector& r2, const Vector& r3s, Vector& dv,
                      Vector& dy, Vector& dzs) const {
        const LongVector rt = (r1 + gs_.transpose() * r3s).cast<long double>();
        LongVector dvl;
        if (neq_ > 0) {
            const LongVector dyl =
                llt_s_.solve(a_long_ * llt_h_.solve(rt) - r2.cast<long double>());
            dvl = llt_h_.solve(rt - a_long_.transpose() * dyl);
            dy = dyl.cast<double>();
        } else {
            dy.resize(0);
            dvl = llt_h_.solve(rt);
        }
        dv = dvl.cast<double>();
        dzs = gs_ * dv - r3s;
    }

    void solve_full(const Vector& r1, const Vector& r2, const Vector& r3s, Vector& dv,
                    Vector& dy, Vector& dzs) const {
        const int m = nvar_ + neq_ + ncone_;
        Vector rhs(m);
        rhs.head(nvar_) = r1;
        if (neq_ > 0) rhs.segment(nvar_, neq_) = r2;
        rhs.tail(ncone_) = r3s;
        int info = 0;
        const int nrhs = 1;
        dsytrs_("L", &m, &nrhs, kfull_.data(), &m, kipiv_.data(), rhs.data(), &m,
                &info);
        dv = rhs.head(nvar_);
        dy = rhs.segment(nvar_, neq_);
        // Re-derive dzs so row 3 holds exactly; any leftover row-3 residual
        // would be amplified by W' when the slack update is unscaled.
        dzs = gs_ * dv - r3s;
    }

    const Program& prog_;
    Settings st_;
    ConeOps cones_;
    int nvar_, neq_, ncone_;
    double res_norm_p_ = 1.0, res_norm_d_ = 1.0;

    Vector v_, y_, s_, z_;
    Scaling w_;
    Matrix gs_;
    LongMatrix a_long_;
    Eigen::LLT<LongMatrix> llt_h_;
    Eigen::LLT<LongMatrix> llt_s_;
    bool full_kkt_ = false;
    Matrix kfull_;
    std::vector<int> kipiv_;
    Vector kwork_;

    double pres_ = kInf, dres_ = kInf, relgap_ = kInf, mu_ = kInf;
};

}  // namespace

Result solve(const Program& prog, const Settings& settings) {
    return Ipm(prog, settings).run();
}

}  // namespace qtdoa::conic
