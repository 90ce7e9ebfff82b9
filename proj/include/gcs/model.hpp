#pragma once

// Uncertain plant model, quadratic cost, closed loops and uncertainty
// sampling.
//
// The plant is
//   x+ = A x + B^w w + B^u u
//   y  = C_y x + D_y^w w
//   z  = C_z x + D_z^w w + D_z^u u
// with the feedback disturbance w = Delta z, Delta block diagonal with
// repeated norm-bounded blocks.  A system may carry no uncertainty at all
// (empty structure); the five w/z-channel matrices are then absent.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gcs/linalg.hpp"
#include "gcs/rng.hpp"

namespace gcs {

/// One repeated uncertainty block: `repeats` copies of a rows x cols
/// norm-bounded matrix on the diagonal.
struct UncertaintyBlock {
    int repeats = 1;
    int rows = 1;
    int cols = 1;
};

/// Number of disturbance rows sum(repeats*rows) over the structure.
int structure_np(const std::vector<UncertaintyBlock>& structure);
/// Number of constraint-output rows sum(repeats*cols).
int structure_nq(const std::vector<UncertaintyBlock>& structure);

class UncertainSystem {
  public:
    /// Full constructor; all dimension identities are checked.
    UncertainSystem(Mat a, Mat bu, Mat cy, Mat bw, Mat dyw, Mat cz, Mat dzu, Mat dzw,
                    std::vector<UncertaintyBlock> structure);

    /// Plant without uncertainty (empty structure, no w/z channels).
    static UncertainSystem certain(Mat a, Mat bu, Mat cy);

    int nx() const { return a_.rows(); }
    int nu() const { return bu_.cols(); }
    int ny() const { return cy_.rows(); }
    int np() const { return structure_np(structure_); }
    int nq() const { return structure_nq(structure_); }
    bool has_uncertainty() const { return !structure_.empty(); }

    const Mat& a() const { return a_; }
    const Mat& bu() const { return bu_; }
    const Mat& cy() const { return cy_; }
    const Mat& bw() const { return *bw_; }
    const Mat& dyw() const { return *dyw_; }
    const Mat& cz() const { return *cz_; }
    const Mat& dzu() const { return *dzu_; }
    const Mat& dzw() const { return *dzw_; }
    const std::vector<UncertaintyBlock>& structure() const { return structure_; }

    bool dyw_is_zero() const;

  private:
    UncertainSystem() = default;
    Mat a_, bu_, cy_;
    std::optional<Mat> bw_, dyw_, cz_, dzu_, dzw_;
    std::vector<UncertaintyBlock> structure_;
};

/// Quadratic stage cost x'Qx + 2x'Nu + u'Ru together with its square
/// factorisation [Cc Dcu]'[Cc Dcu] = [[Q,N],[N',R]].
class CostFunctional {
  public:
    /// Builds the factorisation; requires [[Q,N],[N',R]] PSD and R PD.
    CostFunctional(SymMat q, Mat n, SymMat r);

    int nx() const { return q_.dim(); }
    int nu() const { return r_.dim(); }
    int nc() const { return cc_.rows(); }

    const SymMat& q() const { return q_; }
    const Mat& n() const { return n_; }
    const SymMat& r() const { return r_; }
    const Mat& cc() const { return cc_; }
    const Mat& dcu() const { return dcu_; }

  private:
    SymMat q_;
    Mat n_;
    SymMat r_;
    Mat cc_, dcu_;
};

/// One admissible uncertainty draw: a matrix per structure block (shared by
/// that block's repeats).
struct DeltaRealization {
    std::vector<Mat> blocks;
};

/// Closed-loop matrices for u = -K y.
struct ClosedLoop {
    Mat abar;   // A - B^u K C_y
    Mat ccbar;  // C_c - D_c^u K C_y
    // Uncertainty-channel parts; present iff the system has uncertainty.
    std::optional<Mat> bwbar;   // B^w - B^u K D_y^w
    std::optional<Mat> czbar;   // C_z - D_z^u K C_y
    std::optional<Mat> dzwbar;  // D_z^w - D_z^u K D_y^w
    std::optional<Mat> dcwbar;  // -D_c^u K D_y^w
    bool has_uncertainty() const { return bwbar.has_value(); }
};

struct ValidationReport {
    bool dims_ok = true;
    bool well_posed = true;          // ||D_z^w||_2 < 1, hard requirement
    double dzw_norm = 0.0;
    bool feedthrough_ok = true;      // D_y^w Delta D_z^u structurally zero
    bool nominal_stabilizable = true;  // warning only
    bool nominal_observable = true;    // warning only
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool hard_ok() const { return dims_ok && well_posed; }
};

/// Assumption checks: well-posedness (hard), nominal stabilizability /
/// observability (warnings), structural feed-through test (hard for the
/// dilated synthesis path).
ValidationReport validate(const UncertainSystem& sys, const CostFunctional& cost);

/// Full block-diagonal expansion diag(I_r1 (x) D1, ..., I_rs (x) Ds).
Mat expand_delta(const std::vector<UncertaintyBlock>& structure, const DeltaRealization& d);

/// Delta (I - D_z^w Delta)^{-1} with Delta expanded to full size.
/// Throws SingularMatrixError when conditioning exceeds 1e12.
Mat delta_bar(const UncertainSystem& sys, const DeltaRealization& d);

/// Same resolvent against an arbitrary feed-through (closed-loop use).
Mat delta_bar_against(const Mat& dzw, const Mat& delta_full);

/// Admissible draw: scalar blocks uniform on [-1,1]; larger blocks
/// G / max(1, ||G||_2) * u^(1/(rows*cols)) with G standard normal entries.
DeltaRealization sample_delta(const std::vector<UncertaintyBlock>& structure, Rng& rng);

/// Closed loop for u = -K y (K is n_u x n_y).
ClosedLoop close_loop(const UncertainSystem& sys, const CostFunctional& cost, const Mat& k);

/// One transition x+ = (Abar + Bwbar dbar Czbar) x, where dbar is the
/// resolved closed-loop disturbance map w = dbar Czbar x.
std::vector<double> step(const ClosedLoop& cl, const Mat& dbar, const std::vector<double>& x);

/// Stage cost x'Qx + 2x'Nu + u'Ru.
double stage_cost(const CostFunctional& cost, const std::vector<double>& x, const std::vector<double>& u);

}  // namespace gcs
