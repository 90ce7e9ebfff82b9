#include "gcs/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gcs {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

// ----- dense symmetric helpers (row-major d*d buffers) ----------------------

void sym_to_dense(const SymMat& s, std::vector<double>& out) {
    const int d = s.dim();
    out.assign(static_cast<size_t>(d) * d, 0.0);
    for (int j = 0; j < d; ++j)
        for (int i = j; i < d; ++i) out[static_cast<size_t>(i) * d + j] = out[static_cast<size_t>(j) * d + i] = s.at(i, j);
}

// Lower Cholesky of a dense symmetric matrix; false if not PD.
bool chol_dense(int d, const std::vector<double>& a, std::vector<double>& l) {
    l.assign(static_cast<size_t>(d) * d, 0.0);
    for (int j = 0; j < d; ++j) {
        double s = a[static_cast<size_t>(j) * d + j];
        for (int k = 0; k < j; ++k) s -= l[static_cast<size_t>(j) * d + k] * l[static_cast<size_t>(j) * d + k];
        if (s <= 0.0 || !std::isfinite(s)) return false;
        const double ljj = std::sqrt(s);
        l[static_cast<size_t>(j) * d + j] = ljj;
        for (int i = j + 1; i < d; ++i) {
            double v = a[static_cast<size_t>(i) * d + j];
            for (int k = 0; k < j; ++k) v -= l[static_cast<size_t>(i) * d + k] * l[static_cast<size_t>(j) * d + k];
            l[static_cast<size_t>(i) * d + j] = v / ljj;
        }
    }
    return true;
}

double logdet_from_chol(int d, const std::vector<double>& l) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += std::log(l[static_cast<size_t>(i) * d + i]);
    return 2.0 * s;
}

// Solve L X = B for X (all d*d row-major, L lower triangular).
void tri_solve_lower(int d, const std::vector<double>& l, const std::vector<double>& b, std::vector<double>& x) {
    x.assign(static_cast<size_t>(d) * d, 0.0);
    for (int c = 0; c < d; ++c) {
        for (int i = 0; i < d; ++i) {
            double s = b[static_cast<size_t>(i) * d + c];
            const double* li = &l[static_cast<size_t>(i) * d];
            for (int k = 0; k < i; ++k) s -= li[k] * x[static_cast<size_t>(k) * d + c];
            x[static_cast<size_t>(i) * d + c] = s / li[i];
        }
    }
}

void transpose_dense(int d, const std::vector<double>& a, std::vector<double>& at) {
    at.resize(static_cast<size_t>(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) at[static_cast<size_t>(j) * d + i] = a[static_cast<size_t>(i) * d + j];
}

double lambda_max_dense(int d, const std::vector<double>& a) {
    SymMat s(d);
    for (int j = 0; j < d; ++j)
        for (int i = j; i < d; ++i)
            s.at(i, j) = 0.5 * (a[static_cast<size_t>(i) * d + j] + a[static_cast<size_t>(j) * d + i]);
    return eig_sym(s).values.back();
}

// ----- reduced problem -------------------------------------------------------

struct DenseBlock {
    int d = 0;
    std::vector<double> f0;                  // includes margin on the diagonal
    std::vector<std::vector<double>> fi;     // one dense matrix per reduced variable
};

struct Reduced {
    std::vector<DenseBlock> blocks;
    std::vector<double> c;  // reduced objective
    double c0 = 0.0;        // constant objective offset c' x0
    int nred = 0;
    double nu = 0.0;        // sum of block dims (barrier parameter)
};

struct Elimination {
    bool infeasible = false;          // inconsistent equality rows
    std::string message;
    std::vector<double> x0;           // particular solution (min-norm)
    std::optional<Mat> null_basis;    // nvars x nred; empty when nred == 0
    int nred = 0;
};

Elimination eliminate_equalities(const SdpProblem& p) {
    Elimination e;
    const int n = p.nvars();
    e.x0.assign(n, 0.0);
    const int m = p.num_equalities();
    if (m == 0) {
        e.nred = n;
        if (n > 0) e.null_basis = Mat::identity(n);
        return e;
    }

    const Mat em = p.equality_matrix();
    const std::vector<double> f = p.equality_rhs();
    QrPivoted qr = qr_pivoted(em.transpose(), 1e-12);
    const int r = qr.rank;

    double fscale = 1.0;
    for (double v : f) fscale = std::max(fscale, std::abs(v));

    // R' z = P' f on the leading r rows; remaining rows decide consistency.
    std::vector<double> z1(r, 0.0);
    for (int k = 0; k < r; ++k) {
        double s = f[qr.perm[k]];
        for (int j = 0; j < k; ++j) s -= qr.r(j, k) * z1[j];
        z1[k] = s / qr.r(k, k);
    }
    for (int i = r; i < m; ++i) {
        double s = f[qr.perm[i]];
        for (int j = 0; j < r; ++j) s -= qr.r(j, i) * z1[j];
        if (std::abs(s) > 1e-8 * fscale) {
            e.infeasible = true;
            e.message = "inconsistent equality constraints (residual " + std::to_string(s) + ")";
            return e;
        }
    }

    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = 0; k < r; ++k) s += qr.q(i, k) * z1[k];
        e.x0[i] = s;
    }
    e.nred = n - r;
    if (e.nred > 0) e.null_basis = qr.q.block(0, r, n, e.nred);
    return e;
}

// Nonzero packed entries of a SymMat as (row, col, value) with row >= col.
struct Triplet {
    int r, c;
    double v;
};

std::vector<Triplet> nonzeros(const SymMat& s) {
    std::vector<Triplet> t;
    for (int j = 0; j < s.dim(); ++j)
        for (int i = j; i < s.dim(); ++i)
            if (s.at(i, j) != 0.0) t.push_back({i, j, s.at(i, j)});
    return t;
}

Reduced reduce_problem(const SdpProblem& p, const Elimination& e) {
    Reduced rp;
    rp.nred = e.nred;
    rp.c0 = 0.0;
    const auto& c_full = p.objective();
    for (int i = 0; i < p.nvars(); ++i) rp.c0 += c_full[i] * e.x0[i];
    rp.c.assign(rp.nred, 0.0);
    if (e.null_basis) {
        const Mat& nb = *e.null_basis;
        for (int j = 0; j < rp.nred; ++j) {
            double s = 0.0;
            for (int i = 0; i < p.nvars(); ++i) s += c_full[i] * nb(i, j);
            rp.c[j] = s;
        }
    }

    for (const AffineBlock& b : p.blocks()) {
        DenseBlock db;
        db.d = b.dim;
        rp.nu += b.dim;
        sym_to_dense(b.f0, db.f0);
        for (int i = 0; i < b.dim; ++i) db.f0[static_cast<size_t>(i) * b.dim + i] += b.margin;
        db.fi.assign(rp.nred, std::vector<double>(static_cast<size_t>(b.dim) * b.dim, 0.0));

        for (const auto& [var, coef] : b.fi_sparse) {
            const auto trips = nonzeros(coef);
            const double xv = e.x0[var];
            if (xv != 0.0) {
                for (const Triplet& t : trips) {
                    db.f0[static_cast<size_t>(t.r) * b.dim + t.c] += xv * t.v;
                    if (t.r != t.c) db.f0[static_cast<size_t>(t.c) * b.dim + t.r] += xv * t.v;
                }
            }
            if (!e.null_basis) continue;
            const Mat& nb = *e.null_basis;
            for (int j = 0; j < rp.nred; ++j) {
                const double w = nb(var, j);
                if (w == 0.0) continue;
                auto& fd = db.fi[j];
                for (const Triplet& t : trips) {
                    fd[static_cast<size_t>(t.r) * b.dim + t.c] += w * t.v;
                    if (t.r != t.c) fd[static_cast<size_t>(t.c) * b.dim + t.r] += w * t.v;
                }
            }
        }
        rp.blocks.push_back(std::move(db));
    }
    return rp;
}

// ----- barrier engine --------------------------------------------------------

struct EngineOutcome {
    enum class Kind { Converged, EarlyExit, MaxIter, Failure } kind = Kind::Failure;
    std::string message;
    double t_final = 0.0;
    bool budget_exhausted = false;
};

class BarrierEngine {
  public:
    BarrierEngine(const Reduced& rp, const SolveOptions& opts, int& newton_counter)
        : rp_(rp), opts_(opts), newton_total_(newton_counter) {}

    // Path following from the strictly feasible point y.  early(y) is
    // checked after every accepted Newton step; stop_outer(y, gap) after
    // every centering (both optional).
    EngineOutcome run(std::vector<double>& y, double t0, const std::function<bool(const std::vector<double>&)>& early,
                      const std::function<bool(const std::vector<double>&, double)>& stop_outer = nullptr) {
        t_ = t0;
        if (!refresh_state(y)) return {EngineOutcome::Kind::Failure, "initial point not strictly feasible", t_, false};

        for (int outer = 0; outer < opts_.max_outer; ++outer) {
            EngineOutcome center = center_at_t(y, early);
            if (center.kind == EngineOutcome::Kind::EarlyExit || center.kind == EngineOutcome::Kind::Failure)
                return center;
            if (center.budget_exhausted) return {EngineOutcome::Kind::MaxIter, "newton budget exhausted", t_, true};

            const double obj = objective(y);
            const double gap = rp_.nu / t_;
            if (opts_.verbose >= 1)
                std::printf("[barrier] outer %2d  t=%.3e  obj=%.9e  newton=%d\n", outer, t_, obj, newton_total_);
            if (stop_outer && stop_outer(y, gap)) return {EngineOutcome::Kind::EarlyExit, "", t_, false};
            if (gap <= opts_.gap_tol * (1.0 + std::abs(obj)))
                return {EngineOutcome::Kind::Converged, "", t_, false};
            t_ *= opts_.t_mult;
        }
        return {EngineOutcome::Kind::MaxIter, "outer iteration budget exhausted", t_, true};
    }

    double objective(const std::vector<double>& y) const { return dot(rp_.c, y) + rp_.c0; }
    double t() const { return t_; }

  private:
    struct State {
        std::vector<std::vector<double>> f;     // F_b(y), dense
        std::vector<std::vector<double>> chol;  // Cholesky of -F_b(y)
        double phi = 0.0;
    };

    // Evaluates F_b(y), the Cholesky factors of -F_b(y) and the barrier
    // value; false if y is not strictly feasible.  Used identically for the
    // current iterate and for line-search trials so acceptance decisions
    // and the adopted state can never disagree.
    bool eval_state(const std::vector<double>& y, State& st) const {
        st.f.resize(rp_.blocks.size());
        st.chol.resize(rp_.blocks.size());
        st.phi = t_ * dot(rp_.c, y);
        for (size_t b = 0; b < rp_.blocks.size(); ++b) {
            const DenseBlock& blk = rp_.blocks[b];
            st.f[b] = blk.f0;
            for (int j = 0; j < rp_.nred; ++j) {
                const double yj = y[j];
                if (yj == 0.0) continue;
                const auto& fj = blk.fi[j];
                auto& f = st.f[b];
                for (size_t k = 0; k < f.size(); ++k) f[k] += yj * fj[k];
            }
            std::vector<double> g(st.f[b].size());
            for (size_t k = 0; k < g.size(); ++k) g[k] = -st.f[b][k];
            if (!chol_dense(blk.d, g, st.chol[b])) return false;
            st.phi -= logdet_from_chol(blk.d, st.chol[b]);
        }
        return true;
    }

    bool refresh_state(const std::vector<double>& y) {
        if (!eval_state(y, state_)) return false;
        phi_ = state_.phi;
        return true;
    }

    // Barrier gradient and Hessian at the current state.
    void metrics(std::vector<double>& grad, std::vector<double>& hess) {
        const int m = rp_.nred;
        grad.assign(m, 0.0);
        for (int j = 0; j < m; ++j) grad[j] = t_ * rp_.c[j];
        hess.assign(static_cast<size_t>(m) * m, 0.0);

        for (size_t b = 0; b < rp_.blocks.size(); ++b) {
            if (opts_.reference_kernel)
                block_metrics_reference(b, grad, hess);
            else
                block_metrics_fast(b, grad, hess);
        }
    }

    // Production kernel: W_j = L^-1 F_j L^-T per variable, Hessian as the
    // Gram matrix of the svec'd W_j.  The variable loop and the Hessian row
    // loop are data parallel; every entry is produced by exactly one
    // iteration, so results are identical with and without threads.
    void block_metrics_fast(size_t b, std::vector<double>& grad, std::vector<double>& hess) {
        const DenseBlock& blk = rp_.blocks[b];
        const int d = blk.d;
        const int m = rp_.nred;

        if (d == 1) {
            // scalar constraint: W_j = f_j / g
            const double ginv = 1.0 / (-state_.f[b][0]);
            svw_.assign(static_cast<size_t>(m), 0.0);
            for (int j = 0; j < m; ++j) {
                const double w = blk.fi[j][0] * ginv;
                svw_[j] = w;
                grad[j] += w;
            }
            for (int i = 0; i < m; ++i) {
                const double wi = svw_[i];
                if (wi == 0.0) continue;
                for (int j = i; j < m; ++j) hess[static_cast<size_t>(i) * m + j] += wi * svw_[j];
            }
            return;
        }

        const size_t plen = static_cast<size_t>(d) * (d + 1) / 2;
        const std::vector<double>& l = state_.chol[b];

        svw_.assign(static_cast<size_t>(m) * plen, 0.0);
        const double r2 = std::sqrt(2.0);

        const bool par = opts_.parallel;
#pragma omp parallel for schedule(static) if (par)
        for (int j = 0; j < m; ++j) {
            std::vector<double> t1, t2, w;
            tri_solve_lower(d, l, blk.fi[j], t1);
            transpose_dense(d, t1, t2);
            tri_solve_lower(d, l, t2, w);
            // w == L^-1 F_j L^-T, symmetric up to rounding
            double tr = 0.0;
            double* sv = &svw_[static_cast<size_t>(j) * plen];
            size_t k = 0;
            for (int cc = 0; cc < d; ++cc) {
                tr += w[static_cast<size_t>(cc) * d + cc];
                sv[k++] = w[static_cast<size_t>(cc) * d + cc];
                for (int rr = cc + 1; rr < d; ++rr)
                    sv[k++] = r2 * 0.5 * (w[static_cast<size_t>(rr) * d + cc] + w[static_cast<size_t>(cc) * d + rr]);
            }
            grad[j] += tr;
        }

#pragma omp parallel for schedule(dynamic, 8) if (par)
        for (int i = 0; i < m; ++i) {
            const double* svi = &svw_[static_cast<size_t>(i) * plen];
            for (int j = i; j < m; ++j) {
                const double* svj = &svw_[static_cast<size_t>(j) * plen];
                double s = 0.0;
                for (size_t k = 0; k < plen; ++k) s += svi[k] * svj[k];
                hess[static_cast<size_t>(i) * m + j] += s;
            }
        }
    }

    // Reference kernel: explicit G^-1, gradient tr(G^-1 F_j) and Hessian
    // tr(G^-1 F_i G^-1 F_j) by direct products.  Kept as an independent
    // route for testing the fast kernel.
    void block_metrics_reference(size_t b, std::vector<double>& grad, std::vector<double>& hess) {
        const DenseBlock& blk = rp_.blocks[b];
        const int d = blk.d;
        const int m = rp_.nred;

        SymMat g(d);
        for (int j = 0; j < d; ++j)
            for (int i = j; i < d; ++i) g.at(i, j) = -state_.f[b][static_cast<size_t>(i) * d + j];
        const Mat ginv = sym_inverse_spd(g).to_mat();

        std::vector<std::vector<double>> gm(m);
        for (int j = 0; j < m; ++j) {
            std::vector<double>& mj = gm[j];
            mj.assign(static_cast<size_t>(d) * d, 0.0);
            for (int r = 0; r < d; ++r)
                for (int k = 0; k < d; ++k) {
                    const double gik = ginv(r, k);
                    if (gik == 0.0) continue;
                    for (int c = 0; c < d; ++c) mj[static_cast<size_t>(r) * d + c] += gik * blk.fi[j][static_cast<size_t>(k) * d + c];
                }
            double tr = 0.0;
            for (int r = 0; r < d; ++r) tr += mj[static_cast<size_t>(r) * d + r];
            grad[j] += tr;
        }
        for (int i = 0; i < m; ++i)
            for (int j = i; j < m; ++j) {
                double s = 0.0;
                for (int r = 0; r < d; ++r)
                    for (int c = 0; c < d; ++c) s += gm[i][static_cast<size_t>(r) * d + c] * gm[j][static_cast<size_t>(c) * d + r];
                hess[static_cast<size_t>(i) * m + j] += s;
            }
    }

    // Newton direction from the upper-triangular Hessian; ridge escalation
    // when the factorization fails.
    bool newton_direction(const std::vector<double>& grad, std::vector<double>& hess, std::vector<double>& dy) {
        const int m = rp_.nred;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < i; ++j) hess[static_cast<size_t>(i) * m + j] = hess[static_cast<size_t>(j) * m + i];

        double maxdiag = 0.0;
        for (int i = 0; i < m; ++i) maxdiag = std::max(maxdiag, hess[static_cast<size_t>(i) * m + i]);
        if (!(maxdiag > 0.0) || !std::isfinite(maxdiag)) return false;

        static const double ridges[] = {0.0, 1e-14, 1e-12, 1e-10, 1e-8, 1e-6};
        std::vector<double> hreg, l;
        for (double rr : ridges) {
            hreg = hess;
            for (int i = 0; i < m; ++i) hreg[static_cast<size_t>(i) * m + i] += rr * maxdiag;
            if (!chol_dense(m, hreg, l)) continue;
            // solve L L' dy = -grad
            dy.assign(m, 0.0);
            std::vector<double> ztmp(m, 0.0);
            for (int i = 0; i < m; ++i) {
                double s = -grad[i];
                for (int k = 0; k < i; ++k) s -= l[static_cast<size_t>(i) * m + k] * ztmp[k];
                ztmp[i] = s / l[static_cast<size_t>(i) * m + i];
            }
            for (int i = m - 1; i >= 0; --i) {
                double s = ztmp[i];
                for (int k = i + 1; k < m; ++k) s -= l[static_cast<size_t>(k) * m + i] * dy[k];
                dy[i] = s / l[static_cast<size_t>(i) * m + i];
            }
            return true;
        }
        return false;
    }

    EngineOutcome center_at_t(std::vector<double>& y, const std::function<bool(const std::vector<double>&)>& early) {
        const int m = rp_.nred;
        // Cached state depends on t; rebuild at the start of every centering.
        if (!refresh_state(y)) return {EngineOutcome::Kind::Failure, "feasibility lost at centering start", t_, false};
        std::vector<double> grad, hess, dy;
        double lambda2_prev = std::numeric_limits<double>::infinity();
        for (int it = 0; it < opts_.max_newton_center; ++it) {
            if (newton_total_ >= opts_.max_newton_total) return {EngineOutcome::Kind::MaxIter, "", t_, true};

            metrics(grad, hess);
            if (!newton_direction(grad, hess, dy))
                return {EngineOutcome::Kind::Failure, "newton system breakdown", t_, false};

            const double lambda2 = -dot(grad, dy);
            if (!(lambda2 > 0.0) || !std::isfinite(lambda2)) {
                if (std::abs(lambda2) <= 1e-8) return {EngineOutcome::Kind::Converged, "", t_, false};
                return {EngineOutcome::Kind::Failure, "indefinite newton model", t_, false};
            }
            if (0.5 * lambda2 <= opts_.newton_tol) return {EngineOutcome::Kind::Converged, "", t_, false};
            // In the quadratic phase the decrement squares each step; once it
            // is small and stops improving, the remaining residual is
            // round-off and the point is as central as doubles allow.
            if (0.5 * lambda2 <= 1e-4 && lambda2 > 0.25 * lambda2_prev)
                return {EngineOutcome::Kind::Converged, "", t_, false};
            lambda2_prev = lambda2;

            const double gdy = -lambda2;
            double alpha = 1.0;
            bool accepted = false;
            std::vector<double> y_try(m);
            State trial;
            for (int ls = 0; ls < opts_.max_linesearch; ++ls) {
                for (int j = 0; j < m; ++j) y_try[j] = y[j] + alpha * dy[j];
                if (eval_state(y_try, trial) && trial.phi <= phi_ + 0.25 * alpha * gdy) {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) {
                // Stalled at numerical precision; accept the center when the
                // decrement is already small, else report breakdown.
                if (0.5 * lambda2 <= 1e-4) return {EngineOutcome::Kind::Converged, "", t_, false};
                return {EngineOutcome::Kind::Failure, "line search breakdown", t_, false};
            }

            y = y_try;
            state_ = std::move(trial);
            phi_ = state_.phi;
            ++newton_total_;
            if (opts_.verbose >= 2)
                std::printf("[newton] t=%.2e it=%d lambda2=%.3e alpha=%.3e phi=%.9e obj=%.6e\n", t_, it, lambda2,
                            alpha, phi_, objective(y));
            if (early && early(y)) return {EngineOutcome::Kind::EarlyExit, "", t_, false};
        }
        // Center not reached within the per-center cap; treat as centered
        // enough and let the outer loop continue.
        return {EngineOutcome::Kind::Converged, "approximate center", t_, false};
    }

    const Reduced& rp_;
    const SolveOptions& opts_;
    int& newton_total_;
    double t_ = 1.0;
    double phi_ = 0.0;
    State state_;
    std::vector<double> svw_;
};

double initial_t(const Reduced& rp, const std::vector<double>& y) {
    double obj = std::abs(dot(rp.c, y) + rp.c0);
    double t0 = rp.nu / std::max(1.0, obj);
    return std::min(std::max(t0, 1e-4), 1e4);
}

SdpSolution finish_solution(const SdpProblem& p, const Elimination& e, const std::vector<double>& y,
                            SdpStatus status, int newton_total, double gap, const std::string& msg) {
    SdpSolution sol;
    sol.status = status;
    sol.iterations = newton_total;
    sol.gap_estimate = gap;
    sol.message = msg;
    sol.x = e.x0;
    if (e.null_basis) {
        const Mat& nb = *e.null_basis;
        for (int i = 0; i < p.nvars(); ++i) {
            double s = sol.x[i];
            for (int j = 0; j < e.nred; ++j) s += nb(i, j) * y[j];
            sol.x[i] = s;
        }
    }
    sol.objective_value = dot(p.objective(), sol.x);

    double maxeig = -std::numeric_limits<double>::infinity();
    for (const AffineBlock& b : p.blocks()) {
        std::vector<double> f;
        sym_to_dense(b.f0, f);
        for (const auto& [var, coef] : b.fi_sparse) {
            const double xv = sol.x[var];
            if (xv == 0.0) continue;
            for (int j = 0; j < b.dim; ++j)
                for (int i = j; i < b.dim; ++i) {
                    const double v = xv * coef.at(i, j);
                    f[static_cast<size_t>(i) * b.dim + j] += v;
                    if (i != j) f[static_cast<size_t>(j) * b.dim + i] += v;
                }
        }
        maxeig = std::max(maxeig, lambda_max_dense(b.dim, f));
    }
    sol.max_constraint_eig = maxeig;
    return sol;
}

SdpSolution solve_barrier(SdpProblem& p, const SolveOptions& opts) {
    p.seal(opts);

    Elimination e = eliminate_equalities(p);
    if (e.infeasible) {
        SdpSolution sol;
        sol.status = SdpStatus::Infeasible;
        sol.message = e.message;
        sol.x.assign(p.nvars(), 0.0);
        return sol;
    }

    Reduced rp = reduce_problem(p, e);

    // Fully pinned problems reduce to a constant feasibility check.
    if (rp.nred == 0) {
        std::vector<double> y;
        double maxeig = -std::numeric_limits<double>::infinity();
        for (const DenseBlock& b : rp.blocks) maxeig = std::max(maxeig, lambda_max_dense(b.d, b.f0));
        const bool ok = rp.blocks.empty() || maxeig <= 0.0;
        SdpSolution sol = finish_solution(p, e, y, ok ? SdpStatus::Optimal : SdpStatus::Infeasible, 0, 0.0,
                                          ok ? "" : "constant constraint violated");
        return sol;
    }

    int newton_total = 0;
    std::vector<double> y(rp.nred, 0.0);

    // Phase I unless x0 is already strictly feasible.
    bool feasible = true;
    double start_slack = 0.0;
    for (const DenseBlock& b : rp.blocks) {
        const double le = lambda_max_dense(b.d, b.f0);
        start_slack = std::max(start_slack, le);
        if (le >= 0.0) feasible = false;
    }

    if (!feasible) {
        Reduced aug;
        aug.nred = rp.nred + 1;
        aug.nu = rp.nu;
        aug.c.assign(aug.nred, 0.0);
        aug.c.back() = 1.0;
        aug.c0 = 0.0;
        for (const DenseBlock& b : rp.blocks) {
            DenseBlock ab = b;
            std::vector<double> minus_i(static_cast<size_t>(b.d) * b.d, 0.0);
            for (int i = 0; i < b.d; ++i) minus_i[static_cast<size_t>(i) * b.d + i] = -1.0;
            ab.fi.push_back(std::move(minus_i));
            aug.blocks.push_back(std::move(ab));
        }
        // Box every variable: the slack objective leaves directions that
        // only inflate log-det terms otherwise, and the minimisation would
        // follow such a ray forever.
        for (int j = 0; j < aug.nred; ++j) {
            for (double sign : {1.0, -1.0}) {
                DenseBlock bb;
                bb.d = 1;
                bb.f0 = {-opts.phase1_box};
                bb.fi.assign(aug.nred, {0.0});
                bb.fi[j][0] = sign;
                aug.nu += 1.0;
                aug.blocks.push_back(std::move(bb));
            }
        }

        const double s0 = start_slack + 1.0;
        std::vector<double> ya(aug.nred, 0.0);
        ya.back() = s0;
        const double s_exit = -1e-4 * std::max(1.0, s0);

        BarrierEngine eng(aug, opts, newton_total);
        EngineOutcome out = eng.run(
            ya, aug.nu / std::max(1.0, s0),
            [&](const std::vector<double>& yy) { return yy.back() <= s_exit; },
            // certified lower bound s* >= s - gap already above the
            // infeasibility threshold: stop early, the problem is infeasible
            [&](const std::vector<double>& yy, double gap) { return yy.back() - gap > opts.feas_tol; });

        const double s_final = ya.back();
        if (out.kind == EngineOutcome::Kind::Failure)
            return finish_solution(p, e, std::vector<double>(rp.nred, 0.0), SdpStatus::NumericalFailure, newton_total,
                                   0.0, "phase-1: " + out.message);
        if (out.kind == EngineOutcome::Kind::MaxIter && s_final >= 0.0)
            return finish_solution(p, e, std::vector<double>(rp.nred, 0.0), SdpStatus::MaxIter, newton_total, 0.0,
                                   "phase-1: " + out.message);
        if (s_final > -1e-12) {
            if (s_final > opts.feas_tol)
                return finish_solution(p, e, std::vector<double>(rp.nred, 0.0), SdpStatus::Infeasible, newton_total,
                                       0.0, "phase-1 optimum " + std::to_string(s_final));
            return finish_solution(p, e, std::vector<double>(rp.nred, 0.0), SdpStatus::NumericalFailure, newton_total,
                                   0.0, "phase-1 found no strictly feasible point (optimum near zero)");
        }
        y.assign(ya.begin(), ya.end() - 1);
    }

    BarrierEngine eng(rp, opts, newton_total);
    EngineOutcome out = eng.run(y, initial_t(rp, y), nullptr);
    const double gap = rp.nu / out.t_final;

    switch (out.kind) {
        case EngineOutcome::Kind::Converged:
            return finish_solution(p, e, y, SdpStatus::Optimal, newton_total, gap, "");
        case EngineOutcome::Kind::MaxIter:
            return finish_solution(p, e, y, SdpStatus::MaxIter, newton_total, gap, out.message);
        default:
            return finish_solution(p, e, y, SdpStatus::NumericalFailure, newton_total, gap, out.message);
    }
}

std::map<std::string, SolverBackend>& backend_registry() {
    static std::map<std::string, SolverBackend> reg = {{"barrier", solve_barrier}};
    return reg;
}

}  // namespace

// ----- SdpProblem ------------------------------------------------------------

int SymVar::index(int i, int j) const {
    if (i < j) std::swap(i, j);
    return start + j * dim - j * (j - 1) / 2 + (i - j);
}

SymMat SymVar::value(const std::vector<double>& x) const {
    SymMat s(dim);
    for (int j = 0; j < dim; ++j)
        for (int i = j; i < dim; ++i) s.at(i, j) = x[index(i, j)];
    return s;
}

Mat MatVar::value(const std::vector<double>& x) const {
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = x[index(i, j)];
    return m;
}

double AffineBlock::coefficient_norm() const {
    double s = f0.max_abs();
    for (const auto& [var, m] : fi_sparse) s = std::max(s, m.max_abs());
    return s;
}

void SdpProblem::check_open() const {
    if (sealed_) throw std::logic_error("SdpProblem: modification after seal()");
}

SymVar SdpProblem::add_sym_var(int dim, const std::string& name) {
    check_open();
    require(dim >= 1, "add_sym_var: dim must be >= 1");
    SymVar v{nvars_, dim};
    for (int j = 0; j < dim; ++j)
        for (int i = j; i < dim; ++i)
            names_.push_back(name.empty() ? "" : name + "(" + std::to_string(i) + "," + std::to_string(j) + ")");
    nvars_ += dim * (dim + 1) / 2;
    c_.resize(nvars_, 0.0);
    return v;
}

MatVar SdpProblem::add_mat_var(int rows, int cols, const std::string& name) {
    check_open();
    require(rows >= 1 && cols >= 1, "add_mat_var: rows and cols must be >= 1");
    MatVar v{nvars_, rows, cols};
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            names_.push_back(name.empty() ? "" : name + "(" + std::to_string(i) + "," + std::to_string(j) + ")");
    nvars_ += rows * cols;
    c_.resize(nvars_, 0.0);
    return v;
}

int SdpProblem::add_block(int dim, bool strict) {
    check_open();
    require(dim >= 1, "add_block: dim must be >= 1");
    AffineBlock b;
    b.dim = dim;
    b.strict = strict;
    b.f0 = SymMat::zeros(dim);
    blocks_.push_back(std::move(b));
    return static_cast<int>(blocks_.size()) - 1;
}

void SdpProblem::add_entry(int block, int r, int c, int var, double coef) {
    check_open();
    require(block >= 0 && block < static_cast<int>(blocks_.size()), "add_entry: bad block id");
    require(var >= 0 && var < nvars_, "add_entry: bad variable index");
    AffineBlock& b = blocks_[block];
    require(r >= 0 && r < b.dim && c >= 0 && c < b.dim, "add_entry: entry out of range");
    if (coef == 0.0) return;
    auto it = b.fi_sparse.find(var);
    if (it == b.fi_sparse.end()) it = b.fi_sparse.emplace(var, SymMat::zeros(b.dim)).first;
    it->second.at(r, c) += coef;
}

void SdpProblem::add_const(int block, int r, int c, double value) {
    check_open();
    require(block >= 0 && block < static_cast<int>(blocks_.size()), "add_const: bad block id");
    AffineBlock& b = blocks_[block];
    require(r >= 0 && r < b.dim && c >= 0 && c < b.dim, "add_const: entry out of range");
    b.f0.at(r, c) += value;
}

void SdpProblem::add_equality(const std::vector<std::pair<int, double>>& terms, double rhs) {
    check_open();
    for (const auto& [var, coef] : terms) require(var >= 0 && var < nvars_, "add_equality: bad variable index");
    eq_rows_.push_back(terms);
    eq_rhs_.push_back(rhs);
}

void SdpProblem::set_objective(int var, double coef) {
    check_open();
    require(var >= 0 && var < nvars_, "set_objective: bad variable index");
    c_[var] = coef;
}

void SdpProblem::add_objective(int var, double coef) {
    check_open();
    require(var >= 0 && var < nvars_, "add_objective: bad variable index");
    c_[var] += coef;
}

void SdpProblem::seal(const SolveOptions& opts) {
    if (sealed_) return;
    for (AffineBlock& b : blocks_) {
        b.margin = b.strict ? strict_margin(opts) * std::max(1.0, b.coefficient_norm()) : 0.0;
        b.fi.assign(nvars_, SymMat());
        for (auto& [var, m] : b.fi_sparse) b.fi[var] = m;
        for (int i = 0; i < nvars_; ++i)
            if (b.fi[i].dim() == 0) b.fi[i] = SymMat::zeros(b.dim);
    }
    sealed_ = true;
}

Mat SdpProblem::equality_matrix() const {
    require(!eq_rows_.empty(), "equality_matrix: no equalities");
    Mat e(static_cast<int>(eq_rows_.size()), nvars_);
    for (size_t r = 0; r < eq_rows_.size(); ++r)
        for (const auto& [var, coef] : eq_rows_[r]) e(static_cast<int>(r), var) += coef;
    return e;
}

std::vector<double> SdpProblem::equality_rhs() const { return eq_rhs_; }

double strict_margin(const SolveOptions& opts) { return opts.margin_base; }

std::string to_string(SdpStatus s) {
    switch (s) {
        case SdpStatus::Optimal: return "optimal";
        case SdpStatus::Infeasible: return "infeasible";
        case SdpStatus::MaxIter: return "max_iterations";
        default: return "numerical_failure";
    }
}

SdpSolution solve(SdpProblem& p, const SolveOptions& opts) {
    auto& reg = backend_registry();
    auto it = reg.find(opts.solver);
    if (it == reg.end()) throw std::invalid_argument("solve: unknown solver backend '" + opts.solver + "'");
    return it->second(p, opts);
}

void register_solver_backend(const std::string& name, SolverBackend backend) {
    backend_registry()[name] = std::move(backend);
}

std::vector<std::string> solver_backend_names() {
    std::vector<std::string> names;
    for (const auto& [k, v] : backend_registry()) names.push_back(k);
    return names;
}

double write_sdpa(SdpProblem& p, const SolveOptions& opts, const std::string& path) {
    p.seal(opts);
    Elimination e = eliminate_equalities(p);
    if (e.infeasible) throw std::runtime_error("write_sdpa: " + e.message);
    Reduced rp = reduce_problem(p, e);

    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_sdpa: cannot open " + path);
    out << "\"offset " << rp.c0 << " must be added to the SDPA optimum\"\n";
    out << rp.nred << "\n";
    out << rp.blocks.size() << "\n";
    for (size_t b = 0; b < rp.blocks.size(); ++b) out << rp.blocks[b].d << (b + 1 < rp.blocks.size() ? " " : "\n");
    char buf[64];
    for (int j = 0; j < rp.nred; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", rp.c[j]);
        out << buf << (j + 1 < rp.nred ? " " : "");
    }
    out << "\n";
    // our F0 + sum y_j F_j <= 0 maps to SDPA's sum y_j (-F_j) - F0 >= 0
    for (size_t b = 0; b < rp.blocks.size(); ++b) {
        const DenseBlock& blk = rp.blocks[b];
        for (int i = 0; i < blk.d; ++i)
            for (int j = i; j < blk.d; ++j) {
                const double v = blk.f0[static_cast<size_t>(i) * blk.d + j];
                if (v != 0.0) {
                    std::snprintf(buf, sizeof(buf), "%.17g", v);
                    out << "0 " << (b + 1) << " " << (i + 1) << " " << (j + 1) << " " << buf << "\n";
                }
            }
        for (int k = 0; k < rp.nred; ++k)
            for (int i = 0; i < blk.d; ++i)
                for (int j = i; j < blk.d; ++j) {
                    const double v = -blk.fi[k][static_cast<size_t>(i) * blk.d + j];
                    if (v != 0.0) {
                        std::snprintf(buf, sizeof(buf), "%.17g", v);
                        out << (k + 1) << " " << (b + 1) << " " << (i + 1) << " " << (j + 1) << " " << buf << "\n";
                    }
                }
    }
    return rp.c0;
}

}  // namespace gcs
