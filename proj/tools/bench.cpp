// Benchmark: OpenMP-parallel kernels against their serial counterparts.
//
// Two kernels carry the cycles in this toolkit: the barrier-metric assembly
// inside the interior-point solver (per-variable triangular solves plus a
// Gram matrix of packed vectors) and the Monte Carlo batch runner.  Both
// have a serial mode that must produce bitwise identical results; the
// reference (inverse-based) barrier kernel is timed as well.

#include <chrono>
#include <cstdio>

#include "gcs/sim.hpp"
#include "gcs/synth.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace gcs;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

UncertainSystem bench_system() {
    return UncertainSystem(Mat{{1.1, 0.0, 0.0}, {0.0, 0.0, 1.2}, {-1.0, 1.0, 0.0}},
                           Mat{{0.0, 1.0}, {1.0, 1.0}, {-1.0, 0.0}}, Mat::identity(3),
                           Mat{{0.7, 0.3}, {0.5, -0.4}, {-1.0, 0.0}}, Mat::zeros(3, 2),
                           Mat{{0.41, 0.43, -0.5}, {0.0, -0.32, 0.44}}, Mat{{0.4, -0.4}, {0.0, 0.0}},
                           Mat::zeros(2, 2), {UncertaintyBlock{1, 1, 1}, UncertaintyBlock{1, 1, 1}});
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: not enabled\n");
#endif

    const UncertainSystem sys = bench_system();
    const CostFunctional cost(SymMat::identity(3), Mat::zeros(3, 2), SymMat::identity(2));

    // --- interior-point barrier kernels on the dilated synthesis problem ---
    {
        std::printf("\ndilated synthesis (193 reduced variables, 135-dim block):\n");
        double obj_par = 0.0, obj_ser = 0.0;
        {
            SynthOptions o;
            o.solve.parallel = true;
            const auto t0 = std::chrono::steady_clock::now();
            const SynthOutcome out = synth_gcc_dilated(sys, cost, true, o);
            const double dt = seconds_since(t0);
            obj_par = ok(out) ? result(out).synthesis_cost : -1.0;
            std::printf("  fast kernel, parallel: %7.2f s  (tr(P) = %.6f)\n", dt, obj_par);
        }
        {
            SynthOptions o;
            o.solve.parallel = false;
            const auto t0 = std::chrono::steady_clock::now();
            const SynthOutcome out = synth_gcc_dilated(sys, cost, true, o);
            const double dt = seconds_since(t0);
            obj_ser = ok(out) ? result(out).synthesis_cost : -1.0;
            std::printf("  fast kernel, serial:   %7.2f s  (tr(P) = %.6f)\n", dt, obj_ser);
        }
        std::printf("  parallel == serial: %s\n", obj_par == obj_ser ? "bitwise identical" : "MISMATCH");
    }

    // --- reference (inverse-based) kernel on the smaller direct problem ---
    {
        std::printf("\ndirect synthesis (20 reduced variables):\n");
        for (const bool reference : {false, true}) {
            SynthOptions o;
            o.solve.reference_kernel = reference;
            const auto t0 = std::chrono::steady_clock::now();
            const SynthOutcome out = synth_gcc_direct(sys, cost, true, o);
            const double dt = seconds_since(t0);
            std::printf("  %-18s %7.3f s  (tr(P) = %.6f)\n", reference ? "reference kernel:" : "fast kernel:", dt,
                        ok(out) ? result(out).synthesis_cost : -1.0);
        }
    }

    // --- Monte Carlo batch runner ---
    {
        std::printf("\nmonte carlo batch (5000 runs x 200 steps):\n");
        const SynthOutcome out = synth_gcc_direct(sys, cost, true);
        if (!ok(out)) return 1;
        SimConfig cfg;
        cfg.runs = 5000;
        cfg.horizon = 200;
        cfg.seed = 1;

        cfg.parallel = true;
        auto t0 = std::chrono::steady_clock::now();
        const SimulationReport rp = run(sys, cost, result(out).k, cfg, result(out).p);
        const double t_par = seconds_since(t0);
        std::printf("  parallel: %6.2f s  (effective cost %.4f)\n", t_par, rp.effective_cost);

        cfg.parallel = false;
        t0 = std::chrono::steady_clock::now();
        const SimulationReport rs = run(sys, cost, result(out).k, cfg, result(out).p);
        const double t_ser = seconds_since(t0);
        std::printf("  serial:   %6.2f s  (effective cost %.4f)\n", t_ser, rs.effective_cost);

        bool identical = rp.effective_cost == rs.effective_cost;
        for (size_t i = 0; identical && i < rp.per_run_costs.size(); ++i)
            identical = rp.per_run_costs[i] == rs.per_run_costs[i];
        std::printf("  parallel == serial: %s\n", identical ? "bitwise identical" : "MISMATCH");
        std::printf("  speedup: %.2fx\n", t_ser / t_par);
    }
    return 0;
}
