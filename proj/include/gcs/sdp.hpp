#pragma once

// Standard-form semidefinite programming: a problem container holding
// affine LMI blocks and linear equalities over a scalar decision vector,
// and a small dense log-det barrier interior-point solver sized for a few
// hundred variables and dense blocks up to a couple hundred rows.
//
// Problem form:
//   minimize    c' x
//   subject to  F0_b + sum_i x_i Fi_b  <=  -margin_b I   (for every block b)
//               E x = f
//
// Margins implement strict inequalities: a block marked strict gets
// margin = strict_margin(opts) * max(1, largest coefficient magnitude).
//
// Solution algorithm: equalities are eliminated by substituting
// x = x0 + N y with N an orthonormal null-space basis of E, then log-det
// barrier path following on y with damped Newton centering steps.  A
// Phase-I stage minimises the scalar slack s with F(x) <= s I to find a
// strictly feasible start.  Everything is deterministic: identical problem
// and options give identical iterates.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gcs/linalg.hpp"

namespace gcs {

struct SolveOptions {
    double margin_base = 1e-7;   // strict-inequality margin before block scaling
    double gap_tol = 1e-8;       // stop when nu/t <= gap_tol * (1 + |objective|)
    double newton_tol = 1e-10;   // centering stop: decrement^2 / 2 below this
    double feas_tol = 1e-7;      // Phase-I optimum above this means infeasible
    int max_outer = 60;          // barrier parameter updates (both phases)
    int max_newton_total = 200;  // Newton steps across the whole solve
    int max_newton_center = 60;  // Newton steps per centering
    int max_linesearch = 60;
    double t_mult = 10.0;        // barrier parameter growth per outer step
    double phase1_box = 1e4;     // variable bound during Phase I (blocks
                                 // objective-free recession rays)
    bool parallel = true;        // OpenMP barrier-metric kernels
    bool reference_kernel = false;  // naive serial metrics (testing only)
    int verbose = 0;             // 1: outer steps, 2: newton steps
    std::string solver = "barrier";
};

/// Base margin for constraints the problem states strictly.
double strict_margin(const SolveOptions& opts);

enum class SdpStatus { Optimal, Infeasible, MaxIter, NumericalFailure };

std::string to_string(SdpStatus s);

struct SdpSolution {
    SdpStatus status = SdpStatus::NumericalFailure;
    std::vector<double> x;
    double objective_value = 0.0;
    double max_constraint_eig = 0.0;  // max over blocks of lambda_max(F(x))
    int iterations = 0;               // Newton steps, both phases
    double gap_estimate = 0.0;        // nu / t at termination
    std::string message;
};

/// Handle to a symmetric matrix variable: dim*(dim+1)/2 scalars in svec
/// (column-major lower triangle) order.
struct SymVar {
    int start = 0;
    int dim = 0;
    int index(int i, int j) const;
    SymMat value(const std::vector<double>& x) const;
};

/// Handle to a rectangular matrix variable: rows*cols scalars, row-major.
struct MatVar {
    int start = 0;
    int rows = 0;
    int cols = 0;
    int index(int i, int j) const { return start + i * cols + j; }
    Mat value(const std::vector<double>& x) const;
};

struct AffineBlock {
    int dim = 0;
    bool strict = false;
    double margin = 0.0;  // resolved at seal time
    SymMat f0;
    std::vector<SymMat> fi;             // length nvars after seal
    std::map<int, SymMat> fi_sparse;    // build-time storage, var -> coefficient
    double coefficient_norm() const;
};

class SdpProblem {
  public:
    SymVar add_sym_var(int dim, const std::string& name = "");
    MatVar add_mat_var(int rows, int cols, const std::string& name = "");

    /// New LMI block F0 + sum x_i Fi <= -margin I; returns the block id.
    int add_block(int dim, bool strict);

    /// Accumulate coefficient for scalar variable `var` at block entry (r, c).
    /// Symmetric storage: (r, c) and (c, r) are the same entry.
    void add_entry(int block, int r, int c, int var, double coef);
    void add_const(int block, int r, int c, double value);

    /// Linear equality sum(coef * x_var) = rhs.
    void add_equality(const std::vector<std::pair<int, double>>& terms, double rhs);

    void set_objective(int var, double coef);
    void add_objective(int var, double coef);

    int nvars() const { return nvars_; }
    const std::vector<double>& objective() const { return c_; }
    const std::vector<AffineBlock>& blocks() const { return blocks_; }
    const std::vector<std::string>& var_names() const { return names_; }
    int num_equalities() const { return static_cast<int>(eq_rows_.size()); }

    /// Resolves margins and materialises dense coefficient lists.
    /// Idempotent; builder calls after sealing throw.
    void seal(const SolveOptions& opts);
    bool sealed() const { return sealed_; }

    Mat equality_matrix() const;       // m x nvars (m >= 1 required)
    std::vector<double> equality_rhs() const;

  private:
    void check_open() const;
    int nvars_ = 0;
    std::vector<double> c_;
    std::vector<std::string> names_;
    std::vector<AffineBlock> blocks_;
    std::vector<std::vector<std::pair<int, double>>> eq_rows_;
    std::vector<double> eq_rhs_;
    bool sealed_ = false;
};

/// Solves with the backend named in opts.solver ("barrier" built in).
SdpSolution solve(SdpProblem& p, const SolveOptions& opts = {});

/// Pluggable backend seam: register alternatives under a name and select
/// via SolveOptions::solver.
using SolverBackend = std::function<SdpSolution(SdpProblem&, const SolveOptions&)>;
void register_solver_backend(const std::string& name, SolverBackend backend);
std::vector<std::string> solver_backend_names();

/// Writes the equality-eliminated problem in SDPA sparse format (.dat-s)
/// for cross-checking against external solvers.  Returns the constant
/// objective offset c' x0 that must be added to the external optimum.
double write_sdpa(SdpProblem& p, const SolveOptions& opts, const std::string& path);

}  // namespace gcs
