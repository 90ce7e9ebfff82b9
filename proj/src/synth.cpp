#include "gcs/synth.hpp"

#include <algorithm>
#include <cmath>

namespace gcs {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

// ----- affine matrix expressions --------------------------------------------
//
// A LinMat is a matrix whose entries are affine in the problem's scalar
// variables.  It is the assembly language for the LMI builders below:
// products with constant matrices, sums, transposes, and placement into an
// SdpProblem block or equality rows.

struct LinMat {
    int rows = 0, cols = 0;
    Mat cst;                                            // constant part
    std::vector<std::vector<std::pair<int, double>>> terms;  // per entry, row-major

    LinMat() = default;
    LinMat(int r, int c) : rows(r), cols(c), cst(r, c), terms(static_cast<size_t>(r) * c) {}

    std::vector<std::pair<int, double>>& at(int i, int j) { return terms[static_cast<size_t>(i) * cols + j]; }
    const std::vector<std::pair<int, double>>& at(int i, int j) const {
        return terms[static_cast<size_t>(i) * cols + j];
    }

    static LinMat constant(const Mat& m) {
        LinMat l(m.rows(), m.cols());
        l.cst = m;
        return l;
    }

    static LinMat of_sym(const SymVar& v) {
        LinMat l(v.dim, v.dim);
        for (int i = 0; i < v.dim; ++i)
            for (int j = 0; j < v.dim; ++j) l.at(i, j).push_back({v.index(i, j), 1.0});
        return l;
    }

    static LinMat of_mat(const MatVar& v) {
        LinMat l(v.rows, v.cols);
        for (int i = 0; i < v.rows; ++i)
            for (int j = 0; j < v.cols; ++j) l.at(i, j).push_back({v.index(i, j), 1.0});
        return l;
    }

    LinMat transpose() const {
        LinMat l(cols, rows);
        l.cst = cst.transpose();
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) l.at(j, i) = at(i, j);
        return l;
    }

    LinMat scaled(double s) const {
        LinMat l = *this;
        l.cst = s * l.cst;
        for (auto& e : l.terms)
            for (auto& [v, c] : e) c *= s;
        return l;
    }
};

LinMat operator+(const LinMat& a, const LinMat& b) {
    require(a.rows == b.rows && a.cols == b.cols, "LinMat +: shape mismatch");
    LinMat r = a;
    r.cst = a.cst + b.cst;
    for (size_t k = 0; k < r.terms.size(); ++k)
        r.terms[k].insert(r.terms[k].end(), b.terms[k].begin(), b.terms[k].end());
    return r;
}

LinMat operator-(const LinMat& a, const LinMat& b) { return a + b.scaled(-1.0); }

// a * x with constant a.
LinMat lmul(const Mat& a, const LinMat& x) {
    require(a.cols() == x.rows, "lmul: shape mismatch");
    LinMat r(a.rows(), x.cols);
    r.cst = a * x.cst;
    for (int i = 0; i < a.rows(); ++i)
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < x.cols; ++j)
                for (const auto& [v, c] : x.at(k, j)) r.at(i, j).push_back({v, aik * c});
        }
    return r;
}

// x * b with constant b.
LinMat rmul(const LinMat& x, const Mat& b) {
    require(x.cols == b.rows(), "rmul: shape mismatch");
    LinMat r(x.rows, b.cols());
    r.cst = x.cst * b;
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const auto& e = x.at(i, k);
            if (e.empty()) continue;
            for (int j = 0; j < b.cols(); ++j) {
                const double bkj = b(k, j);
                if (bkj == 0.0) continue;
                for (const auto& [v, c] : e) r.at(i, j).push_back({v, c * bkj});
            }
        }
    return r;
}

// Symmetric placement on the block diagonal: writes entries with i <= j of
// the (symmetric) expression at offset (off, off).
void place_sym(SdpProblem& p, int blk, int off, const LinMat& m) {
    require(m.rows == m.cols, "place_sym: expression not square");
    for (int i = 0; i < m.rows; ++i)
        for (int j = i; j < m.cols; ++j) {
            if (m.cst(i, j) != 0.0) p.add_const(blk, off + i, off + j, m.cst(i, j));
            for (const auto& [v, c] : m.at(i, j)) p.add_entry(blk, off + i, off + j, v, c);
        }
}

// Off-diagonal placement: block rows strictly above block columns, so every
// entry owns its packed slot.
void place_off(SdpProblem& p, int blk, int r0, int c0, const LinMat& m) {
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) {
            if (m.cst(i, j) != 0.0) p.add_const(blk, r0 + i, c0 + j, m.cst(i, j));
            for (const auto& [v, c] : m.at(i, j)) p.add_entry(blk, r0 + i, c0 + j, v, c);
        }
}

// Equality rows: every entry of the expression equals zero.
void equate_zero(SdpProblem& p, const LinMat& m) {
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j) {
            if (m.at(i, j).empty() && m.cst(i, j) == 0.0) continue;
            p.add_equality(m.at(i, j), -m.cst(i, j));
        }
}

// diag(U_1 (x) I_k1, ..., U_s (x) I_ks) as an expression, with k_i the block
// rows (disturbance side) or cols (constraint side).
LinMat multiplier_expr(const std::vector<UncertaintyBlock>& structure, const std::vector<SymVar>& vars,
                       bool disturbance_side) {
    int dim = 0;
    for (const auto& b : structure) dim += b.repeats * (disturbance_side ? b.rows : b.cols);
    LinMat l(dim, dim);
    int off = 0;
    for (size_t i = 0; i < structure.size(); ++i) {
        const int k = disturbance_side ? structure[i].rows : structure[i].cols;
        const int rep = structure[i].repeats;
        for (int t = 0; t < rep; ++t)
            for (int s = 0; s < rep; ++s)
                for (int a = 0; a < k; ++a) l.at(off + t * k + a, off + s * k + a).push_back({vars[i].index(t, s), 1.0});
        off += rep * k;
    }
    return l;
}

// Adds the X >= margin I and Upsilon_i >= margin I blocks shared by both
// synthesis routes, plus the trace relaxation block [[-Z, I], [I, -X]].
struct CommonVars {
    SymVar x;
    SymVar z;
    std::vector<SymVar> upsilon;
};

CommonVars add_common(SdpProblem& p, int nx, const std::vector<UncertaintyBlock>& structure) {
    CommonVars cv;
    cv.x = p.add_sym_var(nx, "X");
    cv.z = p.add_sym_var(nx, "Z");
    for (size_t i = 0; i < structure.size(); ++i)
        cv.upsilon.push_back(p.add_sym_var(structure[i].repeats, "Ups" + std::to_string(i)));

    const LinMat xe = LinMat::of_sym(cv.x);
    const int bx = p.add_block(nx, true);
    place_sym(p, bx, 0, xe.scaled(-1.0));

    for (size_t i = 0; i < structure.size(); ++i) {
        const int bu = p.add_block(structure[i].repeats, true);
        place_sym(p, bu, 0, LinMat::of_sym(cv.upsilon[i]).scaled(-1.0));
    }

    const int bz = p.add_block(2 * nx, false);
    place_sym(p, bz, 0, LinMat::of_sym(cv.z).scaled(-1.0));
    place_off(p, bz, 0, nx, LinMat::constant(Mat::identity(nx)));
    place_sym(p, bz, nx, xe.scaled(-1.0));

    for (int i = 0; i < nx; ++i) p.add_objective(cv.z.index(i, i), 1.0);
    return cv;
}

struct Recovered {
    SymMat x;
    SymMat p;
    MultiplierSet lambda;
    MultiplierSet upsilon;
};

Recovered recover_common(const std::vector<double>& xsol, const CommonVars& cv,
                         const std::vector<UncertaintyBlock>& structure) {
    Recovered r;
    r.x = cv.x.value(xsol);
    r.p = sym_inverse_spd(r.x);
    r.upsilon.structure = structure;
    r.lambda.structure = structure;
    for (const SymVar& uv : cv.upsilon) {
        SymMat u = uv.value(xsol);
        r.upsilon.blocks.push_back(u);
        r.lambda.blocks.push_back(sym_inverse_spd(u));
    }
    return r;
}

std::vector<UncertaintyBlock> effective_structure(const UncertainSystem& sys, bool structured) {
    if (!sys.has_uncertainty()) return {};
    return structured ? sys.structure() : unstructured_cover(sys.structure());
}

// Feed-through check against an arbitrary multiplier structure (the
// admissible set the synthesis assumes, not necessarily the plant's own).
bool feedthrough_zero_for(const UncertainSystem& sys, const std::vector<UncertaintyBlock>& structure) {
    if (!sys.has_uncertainty()) return true;
    DeltaRealization ones;
    for (const auto& b : structure) {
        Mat o(b.rows, b.cols);
        for (double& v : o.data()) v = 1.0;
        ones.blocks.push_back(o);
    }
    Mat dyw_abs = sys.dyw();
    for (double& v : dyw_abs.data()) v = std::abs(v);
    Mat dzu_abs = sys.dzu();
    for (double& v : dzu_abs.data()) v = std::abs(v);
    if ((dyw_abs * expand_delta(structure, ones) * dzu_abs).max_abs() != 0.0) return false;

    Rng rng(0x9216D5D98979FB1BULL);
    const double scale = 1.0 + sys.dyw().max_abs() * sys.dzu().max_abs();
    for (int s = 0; s < 100; ++s) {
        DeltaRealization d = sample_delta(structure, rng);
        const Mat dbar = delta_bar_against(sys.dzw(), expand_delta(structure, d));
        if ((sys.dyw() * dbar * sys.dzu()).max_abs() > 1e-9 * scale) return false;
    }
    return true;
}

SynthOutcome no_controller(SdpStatus status, const SdpSolution& sol, const std::string& where) {
    return NoController{where + ": solver returned " + to_string(status) +
                            (sol.message.empty() ? "" : " (" + sol.message + ")"),
                        sol};
}

}  // namespace

std::string to_string(SynthMethod m) {
    switch (m) {
        case SynthMethod::Lqr: return "lqr";
        case SynthMethod::GccDirect: return "gcc-lemma";
        default: return "gcc-dilated";
    }
}

bool uncertainty_inert(const UncertainSystem& sys) {
    if (!sys.has_uncertainty()) return true;
    return sys.cz().max_abs() == 0.0 && sys.dzu().max_abs() == 0.0;
}

DareSolution solve_dare(const Mat& a, const Mat& bu, const SymMat& q, const Mat& n, const SymMat& r) {
    const int nx = a.rows();
    const int nu = bu.cols();
    require(a.cols() == nx && bu.rows() == nx, "solve_dare: shape mismatch");
    require(q.dim() == nx && r.dim() == nu && n.rows() == nx && n.cols() == nu, "solve_dare: cost shape mismatch");

    const Mat at = a.transpose();
    const Mat but = bu.transpose();
    Mat p = q.to_mat();
    Mat k(nu, nx);
    const int cap = 100000;
    for (int it = 0; it < cap; ++it) {
        const Mat pa = p * a;
        const Mat pb = p * bu;
        Mat g = r.to_mat() + but * pb;          // R + B'PB
        const Mat rhs = but * pa + n.transpose();  // B'PA + N'
        k = lu_solve(g, rhs);
        Mat pn = q.to_mat() + at * pa - (at * pb + n) * k;
        // enforce symmetry of the iterate
        for (int i = 0; i < nx; ++i)
            for (int j = i + 1; j < nx; ++j) pn(i, j) = pn(j, i) = 0.5 * (pn(i, j) + pn(j, i));
        if (!pn.all_finite() || pn.max_abs() > 1e100)
            throw RiccatiDivergenceError("solve_dare: iteration diverged");
        const double diff = (pn - p).max_abs();
        p = pn;
        if (diff < 1e-12) {
            DareSolution out;
            out.p = SymMat::from_mat(p, 1e-6);
            out.k = k;
            out.iterations = it + 1;
            return out;
        }
    }
    throw RiccatiDivergenceError("solve_dare: no convergence within iteration cap");
}

SynthesisResult lqr(const UncertainSystem& sys, const CostFunctional& cost) {
    require(cost.nx() == sys.nx() && cost.nu() == sys.nu(), "lqr: cost dimensions mismatch");
    const Mat eye = Mat::identity(sys.nx());
    require(sys.ny() == sys.nx() && (sys.cy() - eye).max_abs() == 0.0, "lqr: requires state feedback (C_y = I)");

    DareSolution dare = solve_dare(sys.a(), sys.bu(), cost.q(), cost.n(), cost.r());
    SynthesisResult res;
    res.method = SynthMethod::Lqr;
    res.structured = true;
    res.k = dare.k;
    res.p = dare.p;
    res.x_inv = sym_inverse_spd(dare.p);
    res.synthesis_cost = dare.p.trace();
    res.solver.status = SdpStatus::Optimal;
    res.solver.iterations = dare.iterations;
    res.solver.objective_value = res.synthesis_cost;
    res.solver.message = "riccati fixed point";
    return res;
}

SynthOutcome synth_gcc_direct(const UncertainSystem& sys, const CostFunctional& cost, bool structured,
                              const SynthOptions& opts) {
    require(cost.nx() == sys.nx() && cost.nu() == sys.nu(), "synth_gcc_direct: cost dimensions mismatch");
    if (sys.has_uncertainty() && sys.dyw().max_abs() > 1e-12)
        throw std::invalid_argument("synth_gcc_direct: requires D_y^w = 0 (use the dilated synthesis instead)");
    {
        ValidationReport rep = validate(sys, cost);
        if (!rep.hard_ok()) throw std::invalid_argument("synth_gcc_direct: " + rep.errors.front());
    }

    const bool with_unc = !uncertainty_inert(sys);
    const auto structure = with_unc ? effective_structure(sys, structured) : std::vector<UncertaintyBlock>{};

    const int nx = sys.nx(), nu = sys.nu(), ny = sys.ny(), nc = cost.nc();
    const int np = with_unc ? structure_np(structure) : 0;
    const int nq = with_unc ? structure_nq(structure) : 0;

    SdpProblem p;
    CommonVars cv = add_common(p, nx, structure);
    MatVar xbar = p.add_mat_var(ny, ny, "Xbar");
    MatVar yv = p.add_mat_var(nu, ny, "Y");

    const LinMat xe = LinMat::of_sym(cv.x);
    const LinMat ye = LinMat::of_mat(yv);
    const LinMat ycy = rmul(ye, sys.cy());

    // Xbar C_y = C_y X ties the output-feedback change of variables together.
    equate_zero(p, rmul(LinMat::of_mat(xbar), sys.cy()) - lmul(sys.cy(), xe));

    // Main LMI, block order (q, c, x, x, p); q/p rows absent without
    // uncertainty.
    const int dim = nq + nc + 2 * nx + np;
    const int off_q = 0, off_c = nq, off_x1 = nq + nc, off_x2 = nq + nc + nx, off_p = nq + nc + 2 * nx;
    const int blk = p.add_block(dim, true);

    if (with_unc) {
        const LinMat ups_p = multiplier_expr(structure, cv.upsilon, true);
        const LinMat ups_q = multiplier_expr(structure, cv.upsilon, false);
        place_sym(p, blk, off_q, ups_q.scaled(-1.0));
        place_off(p, blk, off_q, off_x2, lmul(sys.cz(), xe) - lmul(sys.dzu(), ycy));
        place_off(p, blk, off_q, off_p, lmul(sys.dzw(), ups_p));
        place_off(p, blk, off_x1, off_p, lmul(sys.bw(), ups_p));
        place_sym(p, blk, off_p, ups_p.scaled(-1.0));
    }
    place_sym(p, blk, off_c, LinMat::constant(-1.0 * Mat::identity(nc)));
    place_off(p, blk, off_c, off_x2, lmul(cost.cc(), xe) - lmul(cost.dcu(), ycy));
    place_sym(p, blk, off_x1, xe.scaled(-1.0));
    place_off(p, blk, off_x1, off_x2, lmul(sys.a(), xe) - lmul(sys.bu(), ycy));
    place_sym(p, blk, off_x2, xe.scaled(-1.0));

    SdpSolution sol = solve(p, opts.solve);
    if (sol.status != SdpStatus::Optimal) return no_controller(sol.status, sol, "synth_gcc_direct");

    Recovered rec = recover_common(sol.x, cv, structure);

    // K = Y (C_y X C_y^+)^{-1}; reduces to Y X^{-1} for state feedback.
    const Mat m_rec = sys.cy() * rec.x.to_mat() * pinv(sys.cy());
    const double cnd = cond2(m_rec);
    if (cnd > 1e10)
        throw SingularMatrixError("synth_gcc_direct: gain recovery matrix C_y X C_y^+ is ill conditioned", cnd);
    const Mat k = lu_solve(m_rec.transpose(), yv.value(sol.x).transpose()).transpose();

    SynthesisResult res;
    res.method = SynthMethod::GccDirect;
    res.structured = structured;
    res.k = k;
    res.p = rec.p;
    res.x_inv = rec.x;
    res.multipliers = rec.lambda;
    res.upsilon = rec.upsilon;
    res.synthesis_cost = rec.p.trace();
    res.solver = sol;
    return res;
}

SynthOutcome synth_gcc_dilated(const UncertainSystem& sys, const CostFunctional& cost, bool structured,
                               const SynthOptions& opts) {
    require(cost.nx() == sys.nx() && cost.nu() == sys.nu(), "synth_gcc_dilated: cost dimensions mismatch");
    {
        ValidationReport rep = validate(sys, cost);
        if (!rep.hard_ok()) throw std::invalid_argument("synth_gcc_dilated: " + rep.errors.front());
    }

    const bool with_unc = !uncertainty_inert(sys);
    const auto structure = with_unc ? effective_structure(sys, structured) : std::vector<UncertaintyBlock>{};
    if (with_unc && !feedthrough_zero_for(sys, structure))
        throw std::invalid_argument(
            "synth_gcc_dilated: feed-through uncertainty D_y^w Delta D_z^u is not structurally zero for the " +
            std::string(structured ? "structured" : "unstructured") + " uncertainty set");

    const int nx = sys.nx(), nu = sys.nu(), ny = sys.ny(), nc = cost.nc();
    const int np = with_unc ? structure_np(structure) : 0;
    const int nq = with_unc ? structure_nq(structure) : 0;

    // Inner block layout (q, c, x1 | x2, p); q/p absent without uncertainty.
    std::vector<int> dims;
    if (with_unc) dims = {nq, nc, nx, nx, np};
    else dims = {nc, nx, nx};
    const int g_q = with_unc ? 0 : -1;
    const int g_c = with_unc ? 1 : 0;
    const int g_x1 = with_unc ? 2 : 1;
    const int g_x2 = with_unc ? 3 : 2;
    const int g_p = with_unc ? 4 : -1;
    const int ngroups = static_cast<int>(dims.size());
    std::vector<int> off(ngroups + 1, 0);
    for (int g = 0; g < ngroups; ++g) off[g + 1] = off[g] + dims[g];
    const int idim = off[ngroups];

    SdpProblem p;
    CommonVars cv = add_common(p, nx, structure);
    MatVar yv = p.add_mat_var(nu, ny, "Y");
    MatVar vbar = p.add_mat_var(ny, ny, "Vbar");

    // V: top rows (q, c, x1) full; bottom rows (x2, p) only over (x2, p).
    std::vector<std::vector<std::optional<MatVar>>> v(ngroups, std::vector<std::optional<MatVar>>(ngroups));
    for (int g = 0; g < ngroups; ++g)
        for (int h = 0; h < ngroups; ++h) {
            const bool bottom = (g == g_x2 || g == g_p);
            if (bottom && !(h == g_x2 || h == g_p)) continue;  // structural zeros
            v[g][h] = p.add_mat_var(dims[g], dims[h], "V" + std::to_string(g) + std::to_string(h));
        }

    auto vexpr = [&](int g, int h) -> LinMat {
        if (v[g][h]) return LinMat::of_mat(*v[g][h]);
        return LinMat(dims[g], dims[h]);
    };

    // Vbar [C_y D_y^w] = [C_y D_y^w] [[V44, V45], [V54, V55]]
    {
        const int wcols = nx + np;
        Mat cydyw(ny, wcols);
        cydyw.set_block(0, 0, sys.cy());
        if (with_unc) cydyw.set_block(0, nx, sys.dyw());

        LinMat rhs(ny, wcols);
        {
            // [[V44, V45], [V54, V55]] as one expression
            LinMat bb(wcols, wcols);
            auto copy_into = [&](const LinMat& src, int r0, int c0) {
                for (int i = 0; i < src.rows; ++i)
                    for (int j = 0; j < src.cols; ++j) {
                        bb.at(r0 + i, c0 + j) = src.at(i, j);
                        bb.cst(r0 + i, c0 + j) = src.cst(i, j);
                    }
            };
            copy_into(vexpr(g_x2, g_x2), 0, 0);
            if (with_unc) {
                copy_into(vexpr(g_x2, g_p), 0, nx);
                copy_into(vexpr(g_p, g_x2), nx, 0);
                copy_into(vexpr(g_p, g_p), nx, nx);
            }
            rhs = lmul(cydyw, bb);
        }
        equate_zero(p, rmul(LinMat::of_mat(vbar), cydyw) - rhs);
    }

    // M = diag(Ups_q, I, X, X, Ups_p)
    LinMat m_expr(idim, idim);
    {
        auto copy_diag = [&](const LinMat& src, int o) {
            for (int i = 0; i < src.rows; ++i)
                for (int j = 0; j < src.cols; ++j) {
                    m_expr.at(o + i, o + j) = src.at(i, j);
                    m_expr.cst(o + i, o + j) = src.cst(i, j);
                }
        };
        if (with_unc) {
            copy_diag(multiplier_expr(structure, cv.upsilon, false), off[g_q]);
            copy_diag(multiplier_expr(structure, cv.upsilon, true), off[g_p]);
        }
        copy_diag(LinMat::constant(Mat::identity(nc)), off[g_c]);
        copy_diag(LinMat::of_sym(cv.x), off[g_x1]);
        copy_diag(LinMat::of_sym(cv.x), off[g_x2]);
    }

    // Coupling block N = M S V resolved through the change of variables:
    // rows (q, c, x1) couple to the bottom slack columns through the plant,
    // bottom rows keep only their own -V/2 terms.
    const double s_top = opts.printed_nbar_variant ? 0.5 : -0.5;
    LinMat n_expr(idim, idim);
    {
        auto add_into = [&](const LinMat& src, int r0, int c0) {
            for (int i = 0; i < src.rows; ++i)
                for (int j = 0; j < src.cols; ++j) {
                    auto& dst = n_expr.at(r0 + i, c0 + j);
                    const auto& se = src.at(i, j);
                    dst.insert(dst.end(), se.begin(), se.end());
                    n_expr.cst(r0 + i, c0 + j) += src.cst(i, j);
                }
        };

        std::vector<int> top = with_unc ? std::vector<int>{g_q, g_c, g_x1} : std::vector<int>{g_c, g_x1};
        // Per top row: constant plant maps hitting (x2, p) columns and the
        // control coupling through Y.
        auto row_const = [&](int g, const Mat*& cxz, const Mat*& cw, const Mat*& du) {
            if (g == g_q) {
                cxz = &sys.cz();
                cw = &sys.dzw();
                du = &sys.dzu();
            } else if (g == g_c) {
                cxz = &cost.cc();
                cw = nullptr;
                du = &cost.dcu();
            } else {
                cxz = &sys.a();
                cw = with_unc ? &sys.bw() : nullptr;
                du = &sys.bu();
            }
        };

        for (int g : top) {
            for (int h : top) add_into(vexpr(g, h).scaled(-0.5), off[g], off[h]);
            // column x2 and (when present) column p
            const Mat* cxz = nullptr;
            const Mat* cw = nullptr;
            const Mat* du = nullptr;
            row_const(g, cxz, cw, du);

            LinMat col_x2 = vexpr(g, g_x2).scaled(s_top) + lmul(*cxz, vexpr(g_x2, g_x2)) -
                            lmul(*du, rmul(LinMat::of_mat(yv), sys.cy()));
            if (with_unc && cw) col_x2 = col_x2 + lmul(*cw, vexpr(g_p, g_x2));
            add_into(col_x2, off[g], off[g_x2]);

            if (with_unc) {
                LinMat col_p = vexpr(g, g_p).scaled(s_top) + lmul(*cxz, vexpr(g_x2, g_p)) -
                               lmul(*du, rmul(LinMat::of_mat(yv), sys.dyw()));
                if (cw) col_p = col_p + lmul(*cw, vexpr(g_p, g_p));
                add_into(col_p, off[g], off[g_p]);
            }
        }

        add_into(vexpr(g_x2, g_x2).scaled(-0.5), off[g_x2], off[g_x2]);
        if (with_unc) {
            add_into(vexpr(g_x2, g_p).scaled(-0.5), off[g_x2], off[g_p]);
            add_into(vexpr(g_p, g_x2).scaled(-0.5), off[g_p], off[g_x2]);
            add_into(vexpr(g_p, g_p).scaled(-0.5), off[g_p], off[g_p]);
        }
    }

    // V as one inner-sized expression.
    LinMat v_expr(idim, idim);
    for (int g = 0; g < ngroups; ++g)
        for (int h = 0; h < ngroups; ++h) {
            if (!v[g][h]) continue;
            const LinMat e = vexpr(g, h);
            for (int i = 0; i < e.rows; ++i)
                for (int j = 0; j < e.cols; ++j) {
                    v_expr.at(off[g] + i, off[h] + j) = e.at(i, j);
                    v_expr.cst(off[g] + i, off[h] + j) = e.cst(i, j);
                }
        }

    // Outer LMI [[-M, 0, V], [., -M, N+M], [., ., -V-V']]
    const int blk = p.add_block(3 * idim, true);
    place_sym(p, blk, 0, m_expr.scaled(-1.0));
    place_sym(p, blk, idim, m_expr.scaled(-1.0));
    place_off(p, blk, 0, 2 * idim, v_expr);
    place_off(p, blk, idim, 2 * idim, n_expr + m_expr);
    place_sym(p, blk, 2 * idim, (v_expr + v_expr.transpose()).scaled(-1.0));

    SdpSolution sol = solve(p, opts.solve);
    if (sol.status != SdpStatus::Optimal) return no_controller(sol.status, sol, "synth_gcc_dilated");

    Recovered rec = recover_common(sol.x, cv, structure);

    const Mat vbar_sol = vbar.value(sol.x);
    const double cnd = cond2(vbar_sol);
    if (cnd > 1e10)
        throw SingularMatrixError("synth_gcc_dilated: slack matrix Vbar is ill conditioned", cnd);
    const Mat k = lu_solve(vbar_sol.transpose(), yv.value(sol.x).transpose()).transpose();

    SynthesisResult res;
    res.method = SynthMethod::GccDilated;
    res.structured = structured;
    res.k = k;
    res.p = rec.p;
    res.x_inv = rec.x;
    res.multipliers = rec.lambda;
    res.upsilon = rec.upsilon;
    res.synthesis_cost = rec.p.trace();
    res.solver = sol;
    return res;
}

AnalysisProblem build_analysis_lmi(const ClosedLoop& cl, const std::vector<UncertaintyBlock>& structure,
                                   const SynthOptions& opts) {
    (void)opts;
    const int nx = cl.abar.rows();
    const bool with_unc = cl.has_uncertainty() && !structure.empty();
    const int np = with_unc ? structure_np(structure) : 0;

    AnalysisProblem ap;
    ap.structure = structure;
    SdpProblem& p = ap.problem;
    ap.p = p.add_sym_var(nx, "P");
    if (with_unc)
        for (size_t i = 0; i < structure.size(); ++i)
            ap.lambda.push_back(p.add_sym_var(structure[i].repeats, "Lam" + std::to_string(i)));

    // P >= margin I
    const int bp = p.add_block(nx, true);
    place_sym(p, bp, 0, LinMat::of_sym(ap.p).scaled(-1.0));
    // Lambda_i >= 0
    for (size_t i = 0; i < ap.lambda.size(); ++i) {
        const int bl = p.add_block(structure[i].repeats, false);
        place_sym(p, bl, 0, LinMat::of_sym(ap.lambda[i]).scaled(-1.0));
    }

    const LinMat pe = LinMat::of_sym(ap.p);
    const int blk = p.add_block(nx + np, true);

    // (x,x): Abar' P Abar - P + Ccbar' Ccbar + Czbar' Lambda_q Czbar
    LinMat xx = lmul(cl.abar.transpose(), rmul(pe, cl.abar)) - pe +
                LinMat::constant(cl.ccbar.transpose() * cl.ccbar);
    if (with_unc) {
        const LinMat lam_q = multiplier_expr(structure, ap.lambda, false);
        const LinMat lam_p = multiplier_expr(structure, ap.lambda, true);
        xx = xx + lmul(cl.czbar->transpose(), rmul(lam_q, *cl.czbar));
        // (x,w) and (w,w)
        LinMat xw = lmul(cl.abar.transpose(), rmul(pe, *cl.bwbar)) +
                    LinMat::constant(cl.ccbar.transpose() * *cl.dcwbar) +
                    lmul(cl.czbar->transpose(), rmul(lam_q, *cl.dzwbar));
        LinMat ww = lmul(cl.bwbar->transpose(), rmul(pe, *cl.bwbar)) +
                    LinMat::constant(cl.dcwbar->transpose() * *cl.dcwbar) +
                    lmul(cl.dzwbar->transpose(), rmul(lam_q, *cl.dzwbar)) - lam_p;
        place_off(p, blk, 0, nx, xw);
        place_sym(p, blk, nx, ww);
    }
    place_sym(p, blk, 0, xx);

    for (int i = 0; i < nx; ++i) p.add_objective(ap.p.index(i, i), 1.0);
    return ap;
}

CertifyOutcome certify(const UncertainSystem& sys, const CostFunctional& cost, const Mat& k,
                       const SynthOptions& opts) {
    require(k.rows() == sys.nu() && k.cols() == sys.ny(), "certify: K must be n_u x n_y");
    const ClosedLoop cl = close_loop(sys, cost, k);
    const auto structure = uncertainty_inert(sys) ? std::vector<UncertaintyBlock>{} : sys.structure();
    AnalysisProblem ap = build_analysis_lmi(cl, structure, opts);
    SdpSolution sol = solve(ap.problem, opts.solve);
    if (sol.status != SdpStatus::Optimal)
        return NotCertifiable{"analysis solver returned " + to_string(sol.status) +
                                  (sol.message.empty() ? "" : " (" + sol.message + ")"),
                              sol};
    Certificate cert;
    cert.p = ap.p.value(sol.x);
    cert.multipliers.structure = structure;
    for (const SymVar& lv : ap.lambda) cert.multipliers.blocks.push_back(lv.value(sol.x));
    cert.bound = cert.p.trace();
    cert.solver = sol;
    return cert;
}

}  // namespace gcs
