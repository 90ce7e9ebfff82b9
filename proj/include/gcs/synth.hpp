#pragma once

// Controller synthesis and certification.
//
// Three synthesis routes:
//   - lqr(): nominal discrete Riccati fixed point (state feedback only);
//   - synth_gcc_direct(): guaranteed-cost static output feedback for plants
//     with no measured disturbance (D_y^w = 0), one congruence-transformed
//     LMI in (X, Upsilon, Xbar, Y) plus a trace relaxation;
//   - synth_gcc_dilated(): guaranteed-cost static output feedback with slack
//     (dilation) variables V, Vbar; handles D_y^w != 0 provided the
//     feed-through uncertainty is structurally zero.
//
// All guaranteed-cost problems minimise tr(Z) with Z >= X^{-1}; the returned
// certificate is P = X^{-1} and the synthesis cost is tr(P).  certify()
// re-derives a minimal-trace certificate for a fixed gain from the analysis
// LMI and is the post-hoc check applied to every synthesised controller.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gcs/linalg.hpp"
#include "gcs/model.hpp"
#include "gcs/multiplier.hpp"
#include "gcs/sdp.hpp"

namespace gcs {

struct RiccatiDivergenceError : std::runtime_error {
    explicit RiccatiDivergenceError(const std::string& what) : std::runtime_error(what) {}
};

enum class SynthMethod { Lqr, GccDirect, GccDilated };

std::string to_string(SynthMethod m);

struct SynthOptions {
    // Synthesis problems carry a few hundred variables after the slack
    // dilation; they get a larger Newton budget than the solver default.
    SynthOptions() { solve.max_newton_total = 2000; }
    SolveOptions solve;
    // Builds the transcribed sign variant of the dilated coupling block
    // (V_{i,4}/V_{i,5} terms entering with +1/2 instead of -1/2).  Kept for
    // comparison only; the default variant is the one consistent with the
    // congruence chain.
    bool printed_nbar_variant = false;
};

struct SynthesisResult {
    SynthMethod method = SynthMethod::Lqr;
    bool structured = true;
    Mat k;                     // n_u x n_y gain, u = -K y
    SymMat p;                  // certificate, P = X^{-1}
    SymMat x_inv;              // X as solved (equals P^{-1})
    MultiplierSet multipliers;  // Lambda_i, derived by inverting Upsilon_i
    MultiplierSet upsilon;      // Upsilon_i as solved
    double synthesis_cost = 0.0;  // trace(p)
    SdpSolution solver;
};

/// Typed no-controller outcome (solver infeasibility or failure).
struct NoController {
    std::string reason;
    SdpSolution solver;
};

using SynthOutcome = std::variant<SynthesisResult, NoController>;

inline bool ok(const SynthOutcome& o) { return std::holds_alternative<SynthesisResult>(o); }
inline const SynthesisResult& result(const SynthOutcome& o) { return std::get<SynthesisResult>(o); }
inline const NoController& failure(const SynthOutcome& o) { return std::get<NoController>(o); }

struct DareSolution {
    SymMat p;
    Mat k;
    int iterations = 0;
};

/// Riccati fixed point P = A'PA - (A'PB+N)(R+B'PB)^{-1}(B'PA+N') + Q from
/// P0 = Q, stopping at 1e-12 max-entry change (cap 1e5 iterations).
DareSolution solve_dare(const Mat& a, const Mat& bu, const SymMat& q, const Mat& n, const SymMat& r);

/// Nominal LQR (requires C_y = I); uncertainty channels ignored.
SynthesisResult lqr(const UncertainSystem& sys, const CostFunctional& cost);

/// Guaranteed-cost synthesis via the direct LMI (requires D_y^w = 0).
SynthOutcome synth_gcc_direct(const UncertainSystem& sys, const CostFunctional& cost, bool structured,
                              const SynthOptions& opts = {});

/// Guaranteed-cost synthesis via the dilated LMI (requires the feed-through
/// product D_y^w Delta D_z^u to be structurally zero for the multiplier
/// structure in use).
SynthOutcome synth_gcc_dilated(const UncertainSystem& sys, const CostFunctional& cost, bool structured,
                               const SynthOptions& opts = {});

/// Analysis LMI for a fixed closed loop: variables P and Lambda_i,
/// minimising tr(P).  Exposed for certification and tests.
struct AnalysisProblem {
    SdpProblem problem;
    SymVar p;
    std::vector<SymVar> lambda;
    std::vector<UncertaintyBlock> structure;
};
AnalysisProblem build_analysis_lmi(const ClosedLoop& cl, const std::vector<UncertaintyBlock>& structure,
                                   const SynthOptions& opts = {});

struct Certificate {
    SymMat p;
    MultiplierSet multipliers;
    double bound = 0.0;  // tr(p)
    SdpSolution solver;
};
struct NotCertifiable {
    std::string reason;
    SdpSolution solver;
};
using CertifyOutcome = std::variant<Certificate, NotCertifiable>;

inline bool certified(const CertifyOutcome& o) { return std::holds_alternative<Certificate>(o); }

/// Minimal-trace certificate for the gain k against the system's own
/// uncertainty structure.
CertifyOutcome certify(const UncertainSystem& sys, const CostFunctional& cost, const Mat& k,
                       const SynthOptions& opts = {});

/// True when the z-channel is identically zero (C_z = 0 and D_z^u = 0), in
/// which case w vanishes in every closed loop and synthesis reduces to the
/// certain-plant problem.
bool uncertainty_inert(const UncertainSystem& sys);

}  // namespace gcs
