#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "fixtures.hpp"
#include "gcs/sim.hpp"
#include "gcs/synth.hpp"

using namespace gcs;
using namespace gcs::testing;

TEST_CASE("certain plant converges to the riccati cost") {
    const UncertainSystem sys = UncertainSystem::certain(plant_a(), plant_bu(), Mat::identity(3));
    const CostFunctional cost = unit_cost();
    const SynthesisResult ref = lqr(example_state_feedback(), cost);

    SimConfig cfg;
    cfg.runs = 1;
    cfg.horizon = 2000;
    cfg.x0_mode = X0Mode::FixedVector;
    cfg.x0_fixed = {1.0, 1.0, 1.0};
    const SimulationReport rep = run(sys, cost, ref.k, cfg);

    double expected = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) expected += ref.p.at(i, j);
    CHECK(std::abs(rep.effective_cost - expected) < 1e-3 * expected);
}

TEST_CASE("zero horizon gives zero cost and respects any bound") {
    const UncertainSystem sys = example_state_feedback();
    const CostFunctional cost = unit_cost();
    SimConfig cfg;
    cfg.runs = 3;
    cfg.horizon = 0;
    const SimulationReport rep = run(sys, cost, Mat::zeros(2, 3), cfg, SymMat::identity(3));
    CHECK(rep.effective_cost == 0.0);
    CHECK(rep.bound_violations == 0);
}

TEST_CASE("reports are deterministic and independent of the execution mode") {
    const UncertainSystem sys = example_state_feedback();
    const CostFunctional cost = unit_cost();
    const SynthOutcome out = synth_gcc_direct(sys, cost, true);
    REQUIRE(ok(out));

    SimConfig a;
    a.runs = 64;
    a.horizon = 50;
    a.seed = 7;
    a.parallel = true;
    SimConfig b = a;
    b.parallel = false;
    const SimulationReport ra1 = run(sys, cost, result(out).k, a);
    const SimulationReport ra2 = run(sys, cost, result(out).k, a);
    const SimulationReport rb = run(sys, cost, result(out).k, b);
    REQUIRE(ra1.per_run_costs.size() == ra2.per_run_costs.size());
    for (size_t i = 0; i < ra1.per_run_costs.size(); ++i) {
        CHECK(ra1.per_run_costs[i] == ra2.per_run_costs[i]);
        CHECK(ra1.per_run_costs[i] == rb.per_run_costs[i]);
    }
    CHECK(ra1.effective_cost == rb.effective_cost);
}

TEST_CASE("certified controller violates neither the bound nor the decrease") {
    const UncertainSystem sys = example_state_feedback();
    const CostFunctional cost = unit_cost();
    const SynthOutcome out = synth_gcc_direct(sys, cost, true);
    REQUIRE(ok(out));

    SimConfig cfg;
    cfg.runs = 500;
    cfg.horizon = 200;
    cfg.seed = 11;
    const SimulationReport rep = run(sys, cost, result(out).k, cfg, result(out).p);
    CHECK(rep.bound_violations == 0);
    CHECK(rep.lyapunov_violations == 0);
    CHECK(rep.divergent_runs == 0);
    // effective cost sits well under the guaranteed bound
    CHECK(rep.effective_cost < result(out).synthesis_cost);
}

TEST_CASE("nominal riccati matrix is not a robust certificate") {
    const UncertainSystem sys = example_state_feedback();
    const CostFunctional cost = unit_cost();
    const SynthesisResult ref = lqr(sys, cost);

    SimConfig cfg;
    cfg.runs = 500;
    cfg.horizon = 200;
    cfg.seed = 13;
    const SimulationReport rep = run(sys, cost, ref.k, cfg, ref.p);
    CHECK(rep.bound_violations > 0);

    // check_bound recomputes the same verdict from the stored samples
    const BoundSummary s = check_bound(rep, ref.p, rep.per_run_x0);
    CHECK(s.violations == rep.bound_violations);
    CHECK(s.runs_checked == cfg.runs);
}

TEST_CASE("divergent runs are excluded from the mean but reported") {
    // open loop is unstable; a long enough horizon overflows the state guard
    const UncertainSystem sys = example_state_feedback();
    const CostFunctional cost = unit_cost();
    SimConfig cfg;
    cfg.runs = 2;
    cfg.horizon = 5000;
    const SimulationReport rep = run(sys, cost, Mat::zeros(2, 3), cfg);
    CHECK(rep.divergent_runs == 2);
    CHECK(std::isinf(rep.max_state_norm));
    for (double c : rep.per_run_costs) CHECK(std::isinf(c));
}

TEST_CASE("trajectory recording writes one csv per run") {
    const UncertainSystem sys = example_state_feedback();
    const CostFunctional cost = unit_cost();
    SimConfig cfg;
    cfg.runs = 2;
    cfg.horizon = 4;
    cfg.record_trajectories = true;
    cfg.trajectory_dir = "/tmp/gcs_traj_test";
    std::remove((cfg.trajectory_dir + "/run_00000.csv").c_str());
    std::remove((cfg.trajectory_dir + "/run_00001.csv").c_str());
    const int rc = std::system(("mkdir -p " + cfg.trajectory_dir).c_str());
    REQUIRE(rc == 0);
    (void)run(sys, cost, Mat::zeros(2, 3), cfg);
    std::ifstream f(cfg.trajectory_dir + "/run_00001.csv");
    REQUIRE(f.good());
    std::string header;
    std::getline(f, header);
    CHECK(header == "k,x_1,x_2,x_3,u_1,u_2,stage_cost");
    int lines = 0;
    std::string s;
    while (std::getline(f, s)) ++lines;
    CHECK(lines == 4);
}
