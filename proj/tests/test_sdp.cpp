#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "gcs/rng.hpp"
#include "gcs/sdp.hpp"

using namespace gcs;

namespace {

// min x subject to [[x, 1], [1, x]] >= 0, optimal at x = 1.
SdpProblem analytic_2x2() {
    SdpProblem p;
    const MatVar x = p.add_mat_var(1, 1, "x");
    const int b = p.add_block(2, false);
    // -[[x,1],[1,x]] <= 0
    p.add_entry(b, 0, 0, x.index(0, 0), -1.0);
    p.add_entry(b, 1, 1, x.index(0, 0), -1.0);
    p.add_const(b, 0, 1, -1.0);
    p.set_objective(x.index(0, 0), 1.0);
    return p;
}

struct RandomLp {
    SdpProblem problem;
    double optimal_value = 0.0;
};

// Random bounded LP with a KKT-certified optimum: active constraints with
// positive duals define the objective, so the optimal value is known by
// construction.
RandomLp random_lp(Rng& rng, int m) {
    RandomLp lp;
    SdpProblem& p = lp.problem;
    const MatVar x = p.add_mat_var(m, 1, "x");

    std::vector<double> xstar(m);
    for (double& v : xstar) v = rng.uniform_pm1();

    // box |x_i| <= 2 keeps the problem bounded
    for (int i = 0; i < m; ++i) {
        int b1 = p.add_block(1, false);
        p.add_entry(b1, 0, 0, x.index(i, 0), 1.0);
        p.add_const(b1, 0, 0, -2.0);
        int b2 = p.add_block(1, false);
        p.add_entry(b2, 0, 0, x.index(i, 0), -1.0);
        p.add_const(b2, 0, 0, -2.0);
    }

    std::vector<double> c(m, 0.0);
    // m active constraints with positive duals
    for (int j = 0; j < m; ++j) {
        std::vector<double> a(m);
        for (double& v : a) v = rng.uniform_pm1();
        double ax = 0.0;
        for (int i = 0; i < m; ++i) ax += a[i] * xstar[i];
        const int b = p.add_block(1, false);
        for (int i = 0; i < m; ++i) p.add_entry(b, 0, 0, x.index(i, 0), a[i]);
        p.add_const(b, 0, 0, -ax);
        const double dual = 0.2 + rng.uniform01();
        for (int i = 0; i < m; ++i) c[i] -= dual * a[i];
    }
    // a few inactive cuts
    for (int j = 0; j < m; ++j) {
        std::vector<double> a(m);
        for (double& v : a) v = rng.uniform_pm1();
        double ax = 0.0;
        for (int i = 0; i < m; ++i) ax += a[i] * xstar[i];
        const int b = p.add_block(1, false);
        for (int i = 0; i < m; ++i) p.add_entry(b, 0, 0, x.index(i, 0), a[i]);
        p.add_const(b, 0, 0, -(ax + 0.5 + rng.uniform01()));
    }

    for (int i = 0; i < m; ++i) {
        p.set_objective(x.index(i, 0), c[i]);
        lp.optimal_value += c[i] * xstar[i];
    }
    return lp;
}

}  // namespace

TEST_CASE("variable allocation") {
    SdpProblem p;
    const SymVar s = p.add_sym_var(3);
    CHECK(p.nvars() == 6);
    const MatVar m = p.add_mat_var(2, 4);
    CHECK(p.nvars() == 14);
    CHECK(s.index(2, 2) < m.index(0, 0));
    CHECK(m.index(0, 0) == 6);
    CHECK(m.index(1, 3) == 13);
    // symmetric indexing maps both triangles to the same scalar
    CHECK(s.index(2, 1) == s.index(1, 2));
}

TEST_CASE("analytic 2x2 optimum") {
    SdpProblem p = analytic_2x2();
    const SdpSolution sol = solve(p);
    REQUIRE(sol.status == SdpStatus::Optimal);
    CHECK(std::abs(sol.x[0] - 1.0) < 1e-5);
    CHECK(std::abs(sol.objective_value - 1.0) < 1e-5);
    CHECK(sol.max_constraint_eig <= 1e-7);
    CHECK(sol.gap_estimate <= 1e-6 * (1.0 + std::abs(sol.objective_value)));
}

TEST_CASE("constant infeasible block") {
    SdpProblem p;
    const MatVar x = p.add_mat_var(1, 1);
    (void)x;
    const int b = p.add_block(2, false);
    p.add_const(b, 0, 0, 1.0);
    p.add_const(b, 1, 1, 1.0);  // I <= 0 is impossible
    const SdpSolution sol = solve(p);
    CHECK(sol.status == SdpStatus::Infeasible);
}

TEST_CASE("strict margin defaults and scaling") {
    SolveOptions opts;
    CHECK(strict_margin(opts) == 1e-7);

    SdpProblem p;
    const MatVar x = p.add_mat_var(1, 1);
    const int b = p.add_block(1, true);
    p.add_entry(b, 0, 0, x.index(0, 0), -1000.0);
    p.set_objective(x.index(0, 0), 1.0);
    p.seal(opts);
    CHECK(p.blocks()[0].margin == doctest::Approx(1e-4).epsilon(1e-12));
}

TEST_CASE("random KKT-certified linear programs") {
    Rng rng(41);
    for (int trial = 0; trial < 8; ++trial) {
        RandomLp lp = random_lp(rng, 4);
        const SdpSolution sol = solve(lp.problem);
        REQUIRE(sol.status == SdpStatus::Optimal);
        CHECK(std::abs(sol.objective_value - lp.optimal_value) < 1e-5 * (1.0 + std::abs(lp.optimal_value)));
    }
}

TEST_CASE("adding a constraint never improves the objective") {
    for (int trial = 0; trial < 5; ++trial) {
        Rng rng(100 + trial);
        RandomLp base = random_lp(rng, 3);
        const SdpSolution s1 = solve(base.problem);
        REQUIRE(s1.status == SdpStatus::Optimal);

        Rng rng2(100 + trial);
        RandomLp tight = random_lp(rng2, 3);
        {
            SdpProblem& p = tight.problem;
            const int b = p.add_block(1, false);
            // halve the box along one coordinate through the old optimum
            const int i = trial % 3;
            p.add_entry(b, 0, 0, i, s1.x[i] >= 0.0 ? 1.0 : -1.0);
            p.add_const(b, 0, 0, -std::abs(s1.x[i]) * 0.5);
        }
        const SdpSolution s2 = solve(tight.problem);
        if (s2.status == SdpStatus::Optimal) CHECK(s2.objective_value >= s1.objective_value - 1e-6);
    }
}

TEST_CASE("determinism of the solve") {
    Rng rng(43);
    RandomLp a = random_lp(rng, 4);
    Rng rng2(43);
    RandomLp b = random_lp(rng2, 4);
    const SdpSolution sa = solve(a.problem);
    const SdpSolution sb = solve(b.problem);
    CHECK(sa.iterations == sb.iterations);
    CHECK(sa.objective_value == sb.objective_value);
    for (size_t i = 0; i < sa.x.size(); ++i) CHECK(sa.x[i] == sb.x[i]);
}

TEST_CASE("equality elimination") {
    {
        // min tr(X) with X >= I and a pinned trace: objective forced to 5
        SdpProblem p;
        const SymVar x = p.add_sym_var(2, "X");
        const int b = p.add_block(2, false);
        p.add_entry(b, 0, 0, x.index(0, 0), -1.0);
        p.add_entry(b, 1, 1, x.index(1, 1), -1.0);
        p.add_entry(b, 0, 1, x.index(1, 0), -1.0);
        p.add_const(b, 0, 0, 1.0);
        p.add_const(b, 1, 1, 1.0);
        p.add_equality({{x.index(0, 0), 1.0}, {x.index(1, 1), 1.0}}, 5.0);
        p.set_objective(x.index(0, 0), 1.0);
        p.set_objective(x.index(1, 1), 1.0);
        const SdpSolution sol = solve(p);
        REQUIRE(sol.status == SdpStatus::Optimal);
        CHECK(sol.objective_value == doctest::Approx(5.0).epsilon(1e-9));
        CHECK(sol.x[x.index(0, 0)] + sol.x[x.index(1, 1)] == doctest::Approx(5.0).epsilon(1e-10));
    }
    {
        // duplicated consistent row is dropped
        SdpProblem p;
        const MatVar x = p.add_mat_var(1, 1);
        (void)x;
        const int b = p.add_block(1, false);
        p.add_entry(b, 0, 0, 0, -1.0);
        p.add_equality({{0, 1.0}}, 2.0);
        p.add_equality({{0, 1.0}}, 2.0);
        const SdpSolution sol = solve(p);
        REQUIRE(sol.status == SdpStatus::Optimal);
        CHECK(std::abs(sol.x[0] - 2.0) < 1e-9);
    }
    {
        // contradictory rows are infeasible before any barrier work
        SdpProblem p;
        const MatVar x = p.add_mat_var(1, 1);
        (void)x;
        const int b = p.add_block(1, false);
        p.add_entry(b, 0, 0, 0, -1.0);
        p.add_equality({{0, 1.0}}, 2.0);
        p.add_equality({{0, 1.0}}, 3.0);
        const SdpSolution sol = solve(p);
        CHECK(sol.status == SdpStatus::Infeasible);
    }
}

TEST_CASE("reference and production barrier kernels agree") {
    Rng rng(44);
    RandomLp a = random_lp(rng, 4);
    Rng rng2(44);
    RandomLp b = random_lp(rng2, 4);

    SolveOptions fast;
    SolveOptions ref;
    ref.reference_kernel = true;
    const SdpSolution sf = solve(a.problem, fast);
    const SdpSolution sr = solve(b.problem, ref);
    REQUIRE(sf.status == SdpStatus::Optimal);
    REQUIRE(sr.status == SdpStatus::Optimal);
    CHECK(std::abs(sf.objective_value - sr.objective_value) < 1e-7 * (1.0 + std::abs(sf.objective_value)));
}

TEST_CASE("parallel and serial kernels produce identical solutions") {
    Rng rng(45);
    RandomLp a = random_lp(rng, 5);
    Rng rng2(45);
    RandomLp b = random_lp(rng2, 5);

    SolveOptions par;
    par.parallel = true;
    SolveOptions ser;
    ser.parallel = false;
    const SdpSolution sp = solve(a.problem, par);
    const SdpSolution ss = solve(b.problem, ser);
    REQUIRE(sp.status == SdpStatus::Optimal);
    CHECK(sp.iterations == ss.iterations);
    for (size_t i = 0; i < sp.x.size(); ++i) CHECK(sp.x[i] == ss.x[i]);
}

TEST_CASE("sdpa export") {
    SdpProblem p = analytic_2x2();
    SolveOptions opts;
    const std::string path = "/tmp/gcs_test_export.dat-s";
    const double offset = write_sdpa(p, opts, path);
    CHECK(offset == 0.0);

    std::ifstream in(path);
    REQUIRE(in.good());
    std::string comment;
    std::getline(in, comment);
    int nvars = 0, nblocks = 0;
    in >> nvars >> nblocks;
    CHECK(nvars == 1);
    CHECK(nblocks == 1);
    int dim = 0;
    in >> dim;
    CHECK(dim == 2);
    double c0 = 0.0;
    in >> c0;
    CHECK(c0 == 1.0);
    std::remove(path.c_str());
}

TEST_CASE("unknown backend is rejected and the registry lists barrier") {
    const auto names = solver_backend_names();
    CHECK(std::find(names.begin(), names.end(), "barrier") != names.end());
    SdpProblem p = analytic_2x2();
    SolveOptions opts;
    opts.solver = "does-not-exist";
    CHECK_THROWS_AS(solve(p, opts), std::invalid_argument);
}
