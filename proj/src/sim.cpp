#include "gcs/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "gcs/rng.hpp"

namespace gcs {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

struct KahanSum {
    double s = 0.0, c = 0.0;
    void add(double v) {
        const double y = v - c;
        const double t = s + y;
        c = (t - s) - y;
        s = t;
    }
};

double quad_form(const SymMat& p, const std::vector<double>& x) {
    double s = 0.0;
    for (int i = 0; i < p.dim(); ++i)
        for (int j = 0; j < p.dim(); ++j) s += x[i] * p.at(i, j) * x[j];
    return s;
}

struct RunResult {
    double cost = 0.0;
    bool divergent = false;
    long lyap_violations = 0;
    double max_norm = 0.0;
    std::vector<double> x0;
};

}  // namespace

SimulationReport run(const UncertainSystem& sys, const CostFunctional& cost, const Mat& k, const SimConfig& cfg,
                     const std::optional<SymMat>& certificate) {
    require(cfg.runs >= 1, "run: runs must be >= 1");
    require(cfg.horizon >= 0, "run: horizon must be >= 0");
    require(k.rows() == sys.nu() && k.cols() == sys.ny(), "run: K must be n_u x n_y");
    if (cfg.x0_mode == X0Mode::FixedVector)
        require(static_cast<int>(cfg.x0_fixed.size()) == sys.nx(), "run: fixed x0 has wrong dimension");
    if (certificate) require(certificate->dim() == sys.nx(), "run: certificate dimension mismatch");

    const ClosedLoop cl = close_loop(sys, cost, k);
    const int nx = sys.nx();
    const bool with_unc = sys.has_uncertainty();
    const double lyap_tol_scale = 1e-7;

    std::vector<RunResult> results(cfg.runs);

    const bool par = cfg.parallel && !cfg.record_trajectories;
#pragma omp parallel for schedule(static) if (par)
    for (int r = 0; r < cfg.runs; ++r) {
        Rng rng = Rng::stream(cfg.seed, static_cast<std::uint64_t>(r));
        RunResult& rr = results[r];

        std::vector<double> x(nx, 0.0);
        if (cfg.x0_mode == X0Mode::FixedVector) {
            x = cfg.x0_fixed;
        } else {
            for (int i = 0; i < nx; ++i) x[i] = rng.normal();
        }
        rr.x0 = x;

        std::FILE* traj = nullptr;
        if (cfg.record_trajectories && !cfg.trajectory_dir.empty()) {
            char name[64];
            std::snprintf(name, sizeof(name), "/run_%05d.csv", r);
            traj = std::fopen((cfg.trajectory_dir + name).c_str(), "w");
            if (traj) {
                std::fprintf(traj, "k");
                for (int i = 0; i < nx; ++i) std::fprintf(traj, ",x_%d", i + 1);
                for (int i = 0; i < sys.nu(); ++i) std::fprintf(traj, ",u_%d", i + 1);
                std::fprintf(traj, ",stage_cost\n");
            }
        }

        KahanSum acc;
        double vx = certificate ? quad_form(*certificate, x) : 0.0;

        for (int t = 0; t < cfg.horizon; ++t) {
            std::vector<double> w;
            if (with_unc) {
                const DeltaRealization d = sample_delta(sys.structure(), rng);
                const Mat dbar = delta_bar_against(*cl.dzwbar, expand_delta(sys.structure(), d));
                w = dbar * (*cl.czbar * x);
            }

            // measured output and control
            std::vector<double> y = sys.cy() * x;
            if (with_unc) {
                const std::vector<double> dw = sys.dyw() * w;
                for (size_t i = 0; i < y.size(); ++i) y[i] += dw[i];
            }
            std::vector<double> u(sys.nu(), 0.0);
            for (int i = 0; i < sys.nu(); ++i) {
                double s = 0.0;
                for (int j = 0; j < sys.ny(); ++j) s += k(i, j) * y[j];
                u[i] = -s;
            }

            const double c = stage_cost(cost, x, u);
            acc.add(c);

            if (traj) {
                std::fprintf(traj, "%d", t);
                for (int i = 0; i < nx; ++i) std::fprintf(traj, ",%.17g", x[i]);
                for (int i = 0; i < sys.nu(); ++i) std::fprintf(traj, ",%.17g", u[i]);
                std::fprintf(traj, ",%.17g\n", c);
            }

            // advance
            std::vector<double> xn = cl.abar * x;
            if (with_unc) {
                const std::vector<double> bw = *cl.bwbar * w;
                for (int i = 0; i < nx; ++i) xn[i] += bw[i];
            }

            if (certificate) {
                const double vn = quad_form(*certificate, xn);
                double x2 = 0.0;
                for (int i = 0; i < nx; ++i) x2 += x[i] * x[i];
                if (vn - vx > -c + lyap_tol_scale * (1.0 + x2)) ++rr.lyap_violations;
                vx = vn;
            }

            double nrm = 0.0;
            bool finite = true;
            for (int i = 0; i < nx; ++i) {
                if (!std::isfinite(xn[i])) finite = false;
                nrm += xn[i] * xn[i];
            }
            nrm = std::sqrt(nrm);
            rr.max_norm = std::max(rr.max_norm, nrm);
            if (!finite || nrm > 1e150) {
                rr.divergent = true;
                break;
            }
            x = std::move(xn);
        }
        if (traj) std::fclose(traj);
        rr.cost = rr.divergent ? std::numeric_limits<double>::infinity() : acc.s;
    }

    SimulationReport rep;
    rep.per_run_costs.reserve(cfg.runs);
    rep.per_run_x0.reserve(cfg.runs);

    KahanSum mean_acc;
    int finite_runs = 0;
    for (const RunResult& rr : results) {
        rep.per_run_costs.push_back(rr.cost);
        rep.per_run_x0.push_back(rr.x0);
        rep.lyapunov_violations += rr.lyap_violations;
        rep.max_state_norm = std::max(rep.max_state_norm, rr.max_norm);
        if (rr.divergent) {
            ++rep.divergent_runs;
            rep.max_state_norm = std::numeric_limits<double>::infinity();
        } else {
            mean_acc.add(rr.cost);
            ++finite_runs;
        }
    }
    rep.effective_cost = finite_runs > 0 ? mean_acc.s / finite_runs : 0.0;

    if (finite_runs > 1) {
        KahanSum var_acc;
        for (const RunResult& rr : results)
            if (!rr.divergent) {
                const double d = rr.cost - rep.effective_cost;
                var_acc.add(d * d);
            }
        const double stddev = std::sqrt(var_acc.s / (finite_runs - 1));
        rep.ci95_halfwidth = 1.96 * stddev / std::sqrt(static_cast<double>(finite_runs));
    }

    if (certificate) {
        for (int r = 0; r < cfg.runs; ++r) {
            const double bound = quad_form(*certificate, rep.per_run_x0[r]) * (1.0 + 1e-6) + 1e-9;
            if (!(rep.per_run_costs[r] <= bound)) ++rep.bound_violations;
        }
    }
    return rep;
}

BoundSummary check_bound(const SimulationReport& report, const SymMat& p,
                         const std::vector<std::vector<double>>& x0_samples) {
    require(x0_samples.size() == report.per_run_costs.size(), "check_bound: x0 sample count mismatch");
    BoundSummary s;
    for (size_t r = 0; r < x0_samples.size(); ++r) {
        const double bound = quad_form(p, x0_samples[r]) * (1.0 + 1e-6) + 1e-9;
        if (!(report.per_run_costs[r] <= bound)) ++s.violations;
        ++s.runs_checked;
    }
    return s;
}

}  // namespace gcs
