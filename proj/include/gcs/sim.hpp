#pragma once

// Monte Carlo closed-loop simulation and empirical cost estimation, with
// runtime verification of the guaranteed-cost bound and the per-step value
// decrease when a certificate is supplied.
//
// Runs are independent: run i draws from Rng::stream(seed, i), so results do
// not depend on execution order and the parallel and serial paths produce
// bitwise identical reports.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gcs/linalg.hpp"
#include "gcs/model.hpp"

namespace gcs {

enum class X0Mode { FixedVector, StandardGaussian };

struct SimConfig {
    int runs = 5000;
    int horizon = 200;
    std::uint64_t seed = 1;
    X0Mode x0_mode = X0Mode::StandardGaussian;
    std::vector<double> x0_fixed;       // used by FixedVector
    bool record_trajectories = false;
    std::string trajectory_dir;         // one CSV per run when recording
    bool parallel = true;
};

struct SimulationReport {
    double effective_cost = 0.0;   // mean of finite per-run costs
    double ci95_halfwidth = 0.0;
    std::vector<double> per_run_costs;          // infinity for divergent runs
    std::vector<std::vector<double>> per_run_x0;
    long bound_violations = 0;     // runs with cost > x0'Px0 (1+1e-6) + 1e-9
    long lyapunov_violations = 0;  // steps with V(x+) - V(x) > -cost + tol
    int divergent_runs = 0;
    double max_state_norm = 0.0;
};

/// Simulates cfg.runs closed-loop trajectories of u = -K y under sampled
/// admissible uncertainty.  When a certificate P is given, checks the
/// per-run cost bound and the per-step value decrease.
SimulationReport run(const UncertainSystem& sys, const CostFunctional& cost, const Mat& k, const SimConfig& cfg,
                     const std::optional<SymMat>& certificate = std::nullopt);

struct BoundSummary {
    long violations = 0;
    int runs_checked = 0;
};

/// Re-checks the per-run cost bound of a finished report against a (possibly
/// different) certificate.
BoundSummary check_bound(const SimulationReport& report, const SymMat& p,
                         const std::vector<std::vector<double>>& x0_samples);

}  // namespace gcs
