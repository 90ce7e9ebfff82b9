#include "gcs/model.hpp"

#include <algorithm>
#include <cmath>

namespace gcs {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

Mat abs_mat(const Mat& m) {
    Mat r = m;
    for (double& v : r.data()) v = std::abs(v);
    return r;
}

// Rank of the reachable subspace plus a spectral-radius estimate of the
// unreachable part.  Returns true when every unreachable mode is strictly
// inside the unit circle.
bool staircase_stabilizable(const Mat& a, const Mat& b) {
    const int n = a.rows();
    Mat reach(n, n * b.cols());
    Mat akb = b;
    for (int k = 0; k < n; ++k) {
        reach.set_block(0, k * b.cols(), akb);
        akb = a * akb;
    }
    QrPivoted qr = qr_pivoted(reach, 1e-10);
    if (qr.rank >= n) return true;
    // Unreachable block of the orthogonally transformed A.
    const Mat at = qr.q.transpose() * a * qr.q;
    const int m = n - qr.rank;
    const Mat a22 = at.block(qr.rank, qr.rank, m, m);
    return spectral_radius_est(a22) < 1.0 - 1e-9;
}

}  // namespace

int structure_np(const std::vector<UncertaintyBlock>& structure) {
    int np = 0;
    for (const auto& b : structure) np += b.repeats * b.rows;
    return np;
}

int structure_nq(const std::vector<UncertaintyBlock>& structure) {
    int nq = 0;
    for (const auto& b : structure) nq += b.repeats * b.cols;
    return nq;
}

UncertainSystem::UncertainSystem(Mat a, Mat bu, Mat cy, Mat bw, Mat dyw, Mat cz, Mat dzu, Mat dzw,
                                 std::vector<UncertaintyBlock> structure)
    : a_(std::move(a)), bu_(std::move(bu)), cy_(std::move(cy)), structure_(std::move(structure)) {
    require(!structure_.empty(), "UncertainSystem: empty structure; use certain() for plants without uncertainty");
    for (const auto& b : structure_)
        require(b.repeats >= 1 && b.rows >= 1 && b.cols >= 1, "UncertaintyBlock: repeats, rows, cols must be >= 1");

    const int nx = a_.rows();
    require(a_.cols() == nx, "UncertainSystem: A must be square");
    require(bu_.rows() == nx, "UncertainSystem: B^u row count must equal n_x");
    require(cy_.cols() == nx, "UncertainSystem: C_y column count must equal n_x");

    const int np = structure_np(structure_);
    const int nq = structure_nq(structure_);
    require(bw.rows() == nx && bw.cols() == np,
            "UncertainSystem: B^w must be n_x x n_p with n_p = sum(repeats*rows) over the structure");
    require(dyw.rows() == cy_.rows() && dyw.cols() == np, "UncertainSystem: D_y^w must be n_y x n_p");
    require(cz.rows() == nq && cz.cols() == nx,
            "UncertainSystem: C_z must be n_q x n_x with n_q = sum(repeats*cols) over the structure");
    require(dzu.rows() == nq && dzu.cols() == bu_.cols(), "UncertainSystem: D_z^u must be n_q x n_u");
    require(dzw.rows() == nq && dzw.cols() == np, "UncertainSystem: D_z^w must be n_q x n_p");

    bw_ = std::move(bw);
    dyw_ = std::move(dyw);
    cz_ = std::move(cz);
    dzu_ = std::move(dzu);
    dzw_ = std::move(dzw);
}

UncertainSystem UncertainSystem::certain(Mat a, Mat bu, Mat cy) {
    const int nx = a.rows();
    require(a.cols() == nx, "UncertainSystem: A must be square");
    require(bu.rows() == nx, "UncertainSystem: B^u row count must equal n_x");
    require(cy.cols() == nx, "UncertainSystem: C_y column count must equal n_x");
    UncertainSystem s;
    s.a_ = std::move(a);
    s.bu_ = std::move(bu);
    s.cy_ = std::move(cy);
    return s;
}

bool UncertainSystem::dyw_is_zero() const {
    return !has_uncertainty() || dyw_->max_abs() == 0.0;
}

CostFunctional::CostFunctional(SymMat q, Mat n, SymMat r) : q_(std::move(q)), n_(std::move(n)), r_(std::move(r)) {
    const int nx = q_.dim();
    const int nu = r_.dim();
    require(n_.rows() == nx && n_.cols() == nu, "CostFunctional: N must be n_x x n_u");

    Mat l;
    if (!cholesky(r_, l)) throw NotPsdError("CostFunctional: R must be positive definite", 0.0);
    {
        EigSym eq = eig_sym(q_);
        if (eq.values.front() < -default_psd_tol(q_))
            throw NotPsdError("CostFunctional: Q must be positive semidefinite", eq.values.front());
    }

    // Stack [[Q, N], [N', R]] and take a full square factor.
    SymMat stacked(nx + nu);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j <= i; ++j) stacked.at(i, j) = q_.at(i, j);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nu; ++j) stacked.at(nx + j, i) = n_(i, j);
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j <= i; ++j) stacked.at(nx + i, nx + j) = r_.at(i, j);

    Mat f = psd_factor(stacked, default_psd_tol(stacked));
    cc_ = f.block(0, 0, f.rows(), nx);
    dcu_ = f.block(0, nx, f.rows(), nu);
}

ValidationReport validate(const UncertainSystem& sys, const CostFunctional& cost) {
    require(cost.nx() == sys.nx(), "validate: cost Q dimension must equal n_x");
    require(cost.nu() == sys.nu(), "validate: cost R dimension must equal n_u");

    ValidationReport rep;

    if (sys.has_uncertainty()) {
        rep.dzw_norm = spectral_norm(sys.dzw());
        if (rep.dzw_norm >= 1.0) {
            rep.well_posed = false;
            rep.errors.push_back("well-posedness violated: ||D_z^w||_2 = " + std::to_string(rep.dzw_norm) +
                                 " must be < 1");
        }
    }

    rep.nominal_stabilizable = staircase_stabilizable(sys.a(), sys.bu());
    if (!rep.nominal_stabilizable)
        rep.warnings.push_back("nominal pair (A, B^u) appears not stabilizable (checked at Delta = 0 only)");

    {
        Mat qhalf = psd_factor(cost.q(), default_psd_tol(cost.q()));
        rep.nominal_observable = staircase_stabilizable(sys.a().transpose(), qhalf.transpose());
        if (!rep.nominal_observable)
            rep.warnings.push_back("nominal pair (A, Q^(1/2)) appears not observable (checked at Delta = 0 only)");
    }

    if (sys.has_uncertainty() && rep.well_posed) {
        // Structural test: all-ones indicator per block instance; the absolute
        // product pattern must vanish for the feed-through to be zero for
        // every admissible Delta.
        DeltaRealization ones;
        for (const auto& b : sys.structure()) {
            Mat o(b.rows, b.cols);
            for (double& v : o.data()) v = 1.0;
            ones.blocks.push_back(o);
        }
        const Mat pattern = abs_mat(sys.dyw()) * expand_delta(sys.structure(), ones) * abs_mat(sys.dzu());
        bool structurally_zero = pattern.max_abs() == 0.0;

        bool sampled_zero = true;
        Rng rng(0x6A09E667F3BCC908ULL);
        const double scale = 1.0 + sys.dyw().max_abs() * sys.dzu().max_abs();
        for (int s = 0; s < 100 && sampled_zero; ++s) {
            DeltaRealization d = sample_delta(sys.structure(), rng);
            const Mat prod = sys.dyw() * delta_bar(sys, d) * sys.dzu();
            if (prod.max_abs() > 1e-9 * scale) sampled_zero = false;
        }

        rep.feedthrough_ok = structurally_zero && sampled_zero;
        if (!rep.feedthrough_ok)
            rep.errors.push_back(
                "feed-through uncertainty D_y^w Delta D_z^u is not structurally zero; "
                "dilated output-feedback synthesis is not applicable");
    }

    return rep;
}

Mat expand_delta(const std::vector<UncertaintyBlock>& structure, const DeltaRealization& d) {
    require(!structure.empty(), "expand_delta: empty structure");
    require(d.blocks.size() == structure.size(), "expand_delta: block count does not match structure");
    std::vector<Mat> diag;
    for (size_t i = 0; i < structure.size(); ++i) {
        const auto& b = structure[i];
        const Mat& di = d.blocks[i];
        require(di.rows() == b.rows && di.cols() == b.cols, "expand_delta: block shape mismatch at index " + std::to_string(i));
        diag.push_back(kron(Mat::identity(b.repeats), di));
    }
    return blkdiag(diag);
}

Mat delta_bar_against(const Mat& dzw, const Mat& delta_full) {
    const int nq = dzw.rows();
    require(dzw.cols() == delta_full.rows() && delta_full.cols() == nq, "delta_bar: shape mismatch");
    Mat m = Mat::identity(nq) - dzw * delta_full;
    if (cond2(m) > 1e12)
        throw SingularMatrixError("delta_bar: I - D_z^w Delta is numerically singular (well-posedness violated)",
                                  cond2(m));
    // delta_full * m^{-1} via the transposed solve.
    return lu_solve(m.transpose(), delta_full.transpose()).transpose();
}

Mat delta_bar(const UncertainSystem& sys, const DeltaRealization& d) {
    require(sys.has_uncertainty(), "delta_bar: system has no uncertainty");
    return delta_bar_against(sys.dzw(), expand_delta(sys.structure(), d));
}

DeltaRealization sample_delta(const std::vector<UncertaintyBlock>& structure, Rng& rng) {
    DeltaRealization d;
    d.blocks.reserve(structure.size());
    for (const auto& b : structure) {
        if (b.rows == 1 && b.cols == 1) {
            Mat m(1, 1);
            m(0, 0) = rng.uniform_pm1();
            d.blocks.push_back(m);
            continue;
        }
        Mat g(b.rows, b.cols);
        for (double& v : g.data()) v = rng.normal();
        const double u = rng.uniform01();
        const double radius = std::pow(u, 1.0 / (static_cast<double>(b.rows) * b.cols));
        const double denom = std::max(1.0, spectral_norm(g));
        d.blocks.push_back((radius / denom) * g);
    }
    return d;
}

ClosedLoop close_loop(const UncertainSystem& sys, const CostFunctional& cost, const Mat& k) {
    require(k.rows() == sys.nu() && k.cols() == sys.ny(), "close_loop: K must be n_u x n_y");
    require(cost.nx() == sys.nx() && cost.nu() == sys.nu(), "close_loop: cost dimensions mismatch");

    ClosedLoop cl;
    const Mat kcy = k * sys.cy();
    cl.abar = sys.a() - sys.bu() * kcy;
    cl.ccbar = cost.cc() - cost.dcu() * kcy;
    if (sys.has_uncertainty()) {
        const Mat kdyw = k * sys.dyw();
        cl.bwbar = sys.bw() - sys.bu() * kdyw;
        cl.czbar = sys.cz() - sys.dzu() * kcy;
        cl.dzwbar = sys.dzw() - sys.dzu() * kdyw;
        cl.dcwbar = -1.0 * (cost.dcu() * kdyw);
    }
    return cl;
}

std::vector<double> step(const ClosedLoop& cl, const Mat& dbar, const std::vector<double>& x) {
    require(static_cast<int>(x.size()) == cl.abar.rows(), "step: state dimension mismatch");
    std::vector<double> xn = cl.abar * x;
    if (cl.has_uncertainty()) {
        require(dbar.rows() == cl.bwbar->cols() && dbar.cols() == cl.czbar->rows(), "step: dbar shape mismatch");
        const std::vector<double> z = *cl.czbar * x;
        const std::vector<double> w = dbar * z;
        const std::vector<double> bw = *cl.bwbar * w;
        for (size_t i = 0; i < xn.size(); ++i) xn[i] += bw[i];
    }
    return xn;
}

double stage_cost(const CostFunctional& cost, const std::vector<double>& x, const std::vector<double>& u) {
    require(static_cast<int>(x.size()) == cost.nx() && static_cast<int>(u.size()) == cost.nu(),
            "stage_cost: dimension mismatch");
    double s = 0.0;
    for (int i = 0; i < cost.nx(); ++i)
        for (int j = 0; j < cost.nx(); ++j) s += x[i] * cost.q().at(i, j) * x[j];
    for (int i = 0; i < cost.nx(); ++i)
        for (int j = 0; j < cost.nu(); ++j) s += 2.0 * x[i] * cost.n()(i, j) * u[j];
    for (int i = 0; i < cost.nu(); ++i)
        for (int j = 0; j < cost.nu(); ++j) s += u[i] * cost.r().at(i, j) * u[j];
    return s;
}

}  // namespace gcs
