#pragma once

// Structured multipliers for the uncertainty set and the quadratic form that
// encodes set membership of (x, w) pairs.

#include <vector>

#include "gcs/linalg.hpp"
#include "gcs/model.hpp"

namespace gcs {

/// One PSD block per uncertainty block; block i has dimension repeats_i.
/// The same container holds either the multipliers Lambda_i or their
/// inverses Upsilon_i; callers track which they hold.
struct MultiplierSet {
    std::vector<SymMat> blocks;
    std::vector<UncertaintyBlock> structure;
};

/// Checks block count/dims against the structure and PSD-ness of every
/// block (eigenvalues >= -1e-9 relative).
void check_multiplier_set(const MultiplierSet& ms);

/// Lambda_p = diag(Lambda_i (x) I_rows_i), Lambda_q = diag(Lambda_i (x) I_cols_i),
/// both built from the same blocks.
struct AssembledMultipliers {
    SymMat lambda_p;  // n_p x n_p
    SymMat lambda_q;  // n_q x n_q
};
AssembledMultipliers assemble(const MultiplierSet& ms);

/// Membership quadratic form for the structured uncertainty set:
/// with xi = (x, w) and z = Czbar x + Dzwbar w,
///   xi' S xi = w' Lambda_p w - z' Lambda_q z,
/// which is <= 0 whenever w = Delta z for an admissible structured Delta.
SymMat s_matrix(const ClosedLoop& cl, const SymMat& lambda_p, const SymMat& lambda_q);

/// xi = (x, w) with w the unique fixed point of w = Delta(Czbar x + Dzwbar w).
std::vector<double> admissible_point(const ClosedLoop& cl, const std::vector<UncertaintyBlock>& structure,
                                     const std::vector<double>& x, const DeltaRealization& d);

/// Structure describing a single unstructured (full-block) multiplier for
/// the same channel dimensions: one block, one repeat, scalar Lambda.
std::vector<UncertaintyBlock> unstructured_cover(const std::vector<UncertaintyBlock>& structure);

}  // namespace gcs
