#include "gcs/multiplier.hpp"

#include <cmath>

namespace gcs {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void check_multiplier_set(const MultiplierSet& ms) {
    require(ms.blocks.size() == ms.structure.size(), "MultiplierSet: block count does not match structure");
    for (size_t i = 0; i < ms.blocks.size(); ++i) {
        require(ms.blocks[i].dim() == ms.structure[i].repeats,
                "MultiplierSet: block " + std::to_string(i) + " dimension must equal repeats");
        EigSym e = eig_sym(ms.blocks[i]);
        const double scale = 1.0 + ms.blocks[i].max_abs();
        if (e.values.front() < -1e-9 * scale)
            throw NotPsdError("MultiplierSet: block " + std::to_string(i) + " is not PSD", e.values.front());
    }
}

AssembledMultipliers assemble(const MultiplierSet& ms) {
    check_multiplier_set(ms);
    std::vector<Mat> pblocks, qblocks;
    for (size_t i = 0; i < ms.blocks.size(); ++i) {
        const Mat li = ms.blocks[i].to_mat();
        pblocks.push_back(kron(li, Mat::identity(ms.structure[i].rows)));
        qblocks.push_back(kron(li, Mat::identity(ms.structure[i].cols)));
    }
    AssembledMultipliers out;
    out.lambda_p = SymMat::from_mat(blkdiag(pblocks), 1e-12);
    out.lambda_q = SymMat::from_mat(blkdiag(qblocks), 1e-12);
    return out;
}

SymMat s_matrix(const ClosedLoop& cl, const SymMat& lambda_p, const SymMat& lambda_q) {
    require(cl.has_uncertainty(), "s_matrix: closed loop has no uncertainty channel");
    const Mat& cz = *cl.czbar;
    const Mat& dzw = *cl.dzwbar;
    const int nx = cz.cols();
    const int np = lambda_p.dim();
    require(dzw.cols() == np && lambda_q.dim() == cz.rows(), "s_matrix: multiplier dimensions mismatch");

    const Mat lq = lambda_q.to_mat();
    const Mat lp = lambda_p.to_mat();
    const Mat a = cz.transpose() * lq * cz;         // x-x
    const Mat b = cz.transpose() * lq * dzw;        // x-w
    const Mat c = dzw.transpose() * lq * dzw;       // w-w

    // xi' S xi = w' Lp w - z' Lq z  (z = Czbar x + Dzwbar w)
    SymMat s(nx + np);
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j <= i; ++j) s.at(i, j) = -a(i, j);
    for (int i = 0; i < np; ++i)
        for (int j = 0; j < nx; ++j) s.at(nx + i, j) = -b(j, i);
    for (int i = 0; i < np; ++i)
        for (int j = 0; j <= i; ++j) s.at(nx + i, nx + j) = lp(i, j) - c(i, j);
    return s;
}

std::vector<double> admissible_point(const ClosedLoop& cl, const std::vector<UncertaintyBlock>& structure,
                                     const std::vector<double>& x, const DeltaRealization& d) {
    require(cl.has_uncertainty(), "admissible_point: closed loop has no uncertainty channel");
    require(static_cast<int>(x.size()) == cl.abar.rows(), "admissible_point: state dimension mismatch");
    const Mat dbar = delta_bar_against(*cl.dzwbar, expand_delta(structure, d));
    const std::vector<double> w = dbar * (*cl.czbar * x);
    std::vector<double> xi = x;
    xi.insert(xi.end(), w.begin(), w.end());
    return xi;
}

std::vector<UncertaintyBlock> unstructured_cover(const std::vector<UncertaintyBlock>& structure) {
    require(!structure.empty(), "unstructured_cover: empty structure");
    UncertaintyBlock full;
    full.repeats = 1;
    full.rows = structure_np(structure);
    full.cols = structure_nq(structure);
    return {full};
}

}  // namespace gcs
