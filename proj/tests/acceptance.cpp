// Acceptance suite: runs every gate criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion.
//
// The reference synthesis-cost values for the benchmark plant (22.15,
// 581.79, 97.63, 94.15) come from the comparative study this toolkit
// reproduces.  The nominal value (22.15) reproduces exactly.  The
// guaranteed-cost values do not: two independent routes in this codebase
// (the interior-point solver on the synthesis inequalities, and a
// multiplier-scanned Riccati recursion that never touches the SDP machinery)
// agree with each other to five digits and place the structured optimum at
// 109.51, while the scalar-multiplier problem is infeasible for this plant.
// The study's own printed certificate matrix has trace 105.99 against its
// claimed cost of 94.15, fails its own analysis inequality for its printed
// gain (minimal certifiable trace 112.87), and admits per-step value-
// decrease violations under admissible uncertainty; its printed gain does
// reproduce the published *effective* cost (45.64 measured vs 45.62
// published).  The affected checks below are therefore expected to fail and
// are kept at their stated tolerances; see README and the per-check output.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "gcs/multiplier.hpp"
#include "gcs/problem_io.hpp"
#include "gcs/rng.hpp"
#include "gcs/sim.hpp"
#include "gcs/synth.hpp"

using namespace gcs;
using namespace gcs::testing;

namespace {

int checks_failed = 0;
int criteria_failed = 0;

struct Criterion {
    explicit Criterion(int id, std::string name) : id_(id), name_(std::move(name)) {}
    void check(bool pass, const std::string& label, const std::string& detail = "") {
        std::printf("    %-4s %s%s%s\n", pass ? "ok" : "FAIL", label.c_str(), detail.empty() ? "" : " -- ",
                    detail.c_str());
        if (!pass) {
            ++checks_failed;
            all_pass_ = false;
        }
    }
    void info(const std::string& text) { std::printf("    info %s\n", text.c_str()); }
    ~Criterion() {
        std::printf("[%s] criterion %d: %s\n\n", all_pass_ ? "PASS" : "FAIL", id_, name_.c_str());
        if (!all_pass_) ++criteria_failed;
    }
    int id_;
    std::string name_;
    bool all_pass_ = true;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

bool within(double value, double target, double rel) { return std::abs(value - target) <= rel * std::abs(target); }

Mat random_mat(int r, int c, Rng& rng, double scale = 1.0) {
    Mat m(r, c);
    for (double& v : m.data()) v = scale * rng.uniform_pm1();
    return m;
}

// Everything the criteria share: both measurement variants of the benchmark
// plant and the synthesis outcomes for the five methods.
struct Context {
    UncertainSystem sys1 = example_state_feedback();
    UncertainSystem sys2 = example_output_feedback();
    CostFunctional cost = unit_cost();

    SynthesisResult lqr_res;
    SynthOutcome direct_struct;
    SynthOutcome direct_unstruct;
    SynthOutcome dilated_struct;
    SynthOutcome dilated_unstruct;
    SynthOutcome ex2_dilated;
    double t_lqr = 0, t_ds = 0, t_du = 0, t_ts = 0, t_tu = 0, t_e2 = 0;

    Context()
        : lqr_res{},
          direct_struct{NoController{}},
          direct_unstruct{NoController{}},
          dilated_struct{NoController{}},
          dilated_unstruct{NoController{}},
          ex2_dilated{NoController{}} {
        auto timed = [](double& slot, auto&& f) {
            const auto t0 = std::chrono::steady_clock::now();
            auto r = f();
            slot = seconds_since(t0);
            return r;
        };
        lqr_res = timed(t_lqr, [&] { return lqr(sys1, cost); });
        direct_struct = timed(t_ds, [&] { return synth_gcc_direct(sys1, cost, true); });
        direct_unstruct = timed(t_du, [&] { return synth_gcc_direct(sys1, cost, false); });
        dilated_struct = timed(t_ts, [&] { return synth_gcc_dilated(sys1, cost, true); });
        dilated_unstruct = timed(t_tu, [&] { return synth_gcc_dilated(sys1, cost, false); });
        ex2_dilated = timed(t_e2, [&] { return synth_gcc_dilated(sys2, cost, true); });
    }
};

std::string cost_or_reason(const SynthOutcome& o) {
    if (ok(o)) return "tr(P) = " + fmt(result(o).synthesis_cost);
    return "no controller (" + failure(o).reason + ")";
}

void criterion1(const Context& cx) {
    Criterion c(1, "benchmark synthesis costs at stated tolerances");
    c.check(within(cx.lqr_res.synthesis_cost, 22.15, 0.005), "nominal regulator tr(P) = 22.15 +- 0.5%",
            "measured " + fmt(cx.lqr_res.synthesis_cost));
    c.check(ok(cx.direct_unstruct) && within(result(cx.direct_unstruct).synthesis_cost, 581.79, 0.01),
            "direct unstructured tr(P) = 581.79 +- 1%", cost_or_reason(cx.direct_unstruct));
    c.check(ok(cx.dilated_unstruct) && within(result(cx.dilated_unstruct).synthesis_cost, 581.79, 0.01),
            "dilated unstructured tr(P) = 581.79 +- 1%", cost_or_reason(cx.dilated_unstruct));
    c.check(ok(cx.direct_struct) && within(result(cx.direct_struct).synthesis_cost, 97.63, 0.02),
            "direct structured tr(P) = 97.63 +- 2%", cost_or_reason(cx.direct_struct));
    c.check(ok(cx.dilated_struct) && within(result(cx.dilated_struct).synthesis_cost, 97.63, 0.02),
            "dilated structured tr(P) = 97.63 +- 2%", cost_or_reason(cx.dilated_struct));
    c.info("synthesis wall times [s]: lqr " + fmt(cx.t_lqr) + ", direct " + fmt(cx.t_ds) + "/" + fmt(cx.t_du) +
           ", dilated " + fmt(cx.t_ts) + "/" + fmt(cx.t_tu) + " (expected < 5 s each)");
    c.info("independent multiplier-recursion route agrees with the structured optimum to < 0.3% (see unit suite)");
    {
        SynthOptions printed;
        printed.printed_nbar_variant = true;
        const SynthOutcome alt = synth_gcc_dilated(cx.sys1, cx.cost, true, printed);
        c.info("transcribed-sign dilated variant: " + cost_or_reason(alt) + " (comparison only, not a certificate)");
    }
}

void criterion2(const Context& cx) {
    Criterion c(2, "measured-disturbance plant: dilated synthesis and certification");
    const bool feasible = ok(cx.ex2_dilated);
    c.check(feasible, "dilated structured synthesis is feasible", cost_or_reason(cx.ex2_dilated));
    if (!feasible) return;
    const SynthesisResult& res = result(cx.ex2_dilated);
    c.check(within(res.synthesis_cost, 94.15, 0.02), "tr(P) = 94.15 +- 2%", "measured " + fmt(res.synthesis_cost));

    const CertifyOutcome cert = certify(cx.sys2, cx.cost, res.k, SynthOptions{});
    c.check(certified(cert), "recovered gain passes certification",
            certified(cert) ? "bound " + fmt(std::get<Certificate>(cert).bound)
                            : std::get<NotCertifiable>(cert).reason);

    // informative comparison against the published gain and certificate
    const Mat k_ref{{1.1431, 0.1282, -0.3585, 0.0947}, {0.6881, -0.7581, 0.4561, 0.0596}};
    SymMat p_ref(3);
    p_ref.at(0, 0) = 61.9182;
    p_ref.at(1, 0) = 3.2483;
    p_ref.at(2, 0) = -41.2619;
    p_ref.at(1, 1) = 9.8246;
    p_ref.at(2, 1) = -7.1655;
    p_ref.at(2, 2) = 34.2462;
    c.info("max |K - K_ref| = " + fmt((res.k - k_ref).max_abs()) + ", max |P - P_ref| = " +
           fmt((res.p.to_mat() - p_ref.to_mat()).max_abs()) + " (informative; optima need not be unique)");
    c.info("note: trace of the published certificate itself is " + fmt(p_ref.trace()) +
           ", already above the published cost 94.15");
    const CertifyOutcome cref = certify(cx.sys2, cx.cost, k_ref, SynthOptions{});
    if (certified(cref))
        c.info("minimal certifiable trace for the published gain: " + fmt(std::get<Certificate>(cref).bound));
}

void criterion3(const Context& cx) {
    Criterion c(3, "effective costs over 5000 runs x 200 steps");
    SimConfig cfg;
    cfg.runs = 5000;
    cfg.horizon = 200;
    cfg.seed = 1;

    const auto t0 = std::chrono::steady_clock::now();
    double eff_struct = -1.0;
    if (ok(cx.direct_struct)) {
        const SimulationReport rep = run(cx.sys1, cx.cost, result(cx.direct_struct).k, cfg);
        eff_struct = rep.effective_cost;
        c.check(eff_struct >= 35.0 && eff_struct <= 55.0, "structured effective cost in [35, 55]",
                "measured " + fmt(eff_struct) + " +- " + fmt(rep.ci95_halfwidth));
    } else {
        c.check(false, "structured effective cost in [35, 55]", "no structured controller");
    }

    if (ok(cx.direct_unstruct)) {
        const SimulationReport rep = run(cx.sys1, cx.cost, result(cx.direct_unstruct).k, cfg);
        c.check(rep.effective_cost >= 37.0 && rep.effective_cost <= 58.0, "unstructured effective cost in [37, 58]",
                "measured " + fmt(rep.effective_cost));
        c.check(eff_struct >= 0.0 && eff_struct <= rep.effective_cost,
                "structured <= unstructured on the same draw sequence", "");
    } else {
        c.check(false, "unstructured effective cost in [37, 58]",
                "no unstructured controller exists for this plant (scalar multiplier infeasible)");
        c.check(false, "structured <= unstructured on the same draw sequence", "unstructured side undefined");
    }

    {
        const SimulationReport rep = run(cx.sys1, cx.cost, cx.lqr_res.k, cfg);
        const bool pass = eff_struct > 0.0 && rep.effective_cost >= 5.0 * eff_struct;
        c.check(pass, "nominal-regulator effective cost >= 5x structured",
                "measured " + fmt(rep.effective_cost) + " vs " + fmt(eff_struct));
    }
    c.info("simulation wall time " + fmt(seconds_since(t0)) + " s for three 5000-run batches (expected < 15 s each)");
}

void criterion4(const Context& cx) {
    Criterion c(4, "certified controllers: zero bound and zero decrease violations in 5000 runs");
    SimConfig cfg;
    cfg.runs = 5000;
    cfg.horizon = 200;
    cfg.seed = 2;

    struct Case {
        const char* label;
        const UncertainSystem* sys;
        const SynthOutcome* out;
    } cases[] = {
        {"direct structured", &cx.sys1, &cx.direct_struct},
        {"dilated structured", &cx.sys1, &cx.dilated_struct},
        {"measured-disturbance dilated", &cx.sys2, &cx.ex2_dilated},
    };
    for (const Case& k : cases) {
        if (!ok(*k.out)) {
            c.check(false, std::string(k.label) + ": controller exists", failure(*k.out).reason);
            continue;
        }
        const SynthesisResult& res = result(*k.out);
        const CertifyOutcome cert = certify(*k.sys, cx.cost, res.k, SynthOptions{});
        c.check(certified(cert), std::string(k.label) + ": certifiable", "");
        const SimulationReport rep = run(*k.sys, cx.cost, res.k, cfg, res.p);
        c.check(rep.bound_violations == 0, std::string(k.label) + ": 0 of 5000 runs violate the cost bound",
                std::to_string(rep.bound_violations) + " violations");
        c.check(rep.lyapunov_violations == 0, std::string(k.label) + ": 0 per-step decrease violations",
                std::to_string(rep.lyapunov_violations) + " violations");
    }
}

void criterion5(const Context& cx) {
    Criterion c(5, "reduction to the nominal regulator with zeroed uncertainty channels");
    const UncertainSystem zero = example_zero_channels();
    const double tr_ref = cx.lqr_res.synthesis_cost;

    for (const bool dilated : {false, true}) {
        const SynthOutcome out =
            dilated ? synth_gcc_dilated(zero, cx.cost, true) : synth_gcc_direct(zero, cx.cost, true);
        const char* tag = dilated ? "dilated" : "direct";
        if (!ok(out)) {
            c.check(false, std::string(tag) + " path solves the zero-channel plant", failure(out).reason);
            continue;
        }
        const SynthesisResult& res = result(out);
        c.check(std::abs(res.synthesis_cost - tr_ref) <= 0.01 * tr_ref,
                std::string(tag) + ": |tr(P) - tr(P_riccati)| <= 1%",
                fmt(res.synthesis_cost) + " vs " + fmt(tr_ref));
        c.check((res.k - cx.lqr_res.k).max_abs() <= 1e-3, std::string(tag) + ": max |K - K_riccati| <= 1e-3",
                "measured " + fmt((res.k - cx.lqr_res.k).max_abs()));
    }
}

void criterion6(const Context& cx) {
    Criterion c(6, "multiplier containment: structured never beats unstructured by less than zero");
    if (ok(cx.direct_unstruct)) {
        c.check(result(cx.direct_struct).synthesis_cost <= result(cx.direct_unstruct).synthesis_cost + 1e-6,
                "benchmark plant: structured <= unstructured + 1e-6", "");
    } else {
        c.check(true, "benchmark plant: structured <= unstructured + 1e-6",
                "unstructured side infeasible; containment holds vacuously");
    }

    SynthOptions tight;
    tight.solve.gap_tol = 1e-10;
    Rng rng(601);
    int tested = 0, attempts = 0;
    while (tested < 20 && attempts < 200) {
        ++attempts;
        const int s = 2 + static_cast<int>(rng.uniform01() * 2.0);  // 2 or 3 scalar blocks
        std::vector<UncertaintyBlock> st(s, UncertaintyBlock{1, 1, 1});
        Mat a = random_mat(3, 3, rng);
        a = (0.9 / std::max(0.9, spectral_radius_est(a))) * a;
        UncertainSystem sys(a, random_mat(3, 2, rng), Mat::identity(3), random_mat(3, s, rng, 0.2),
                            Mat::zeros(3, s), random_mat(s, 3, rng, 0.2), random_mat(s, 2, rng, 0.05),
                            Mat::zeros(s, s), st);
        SynthOutcome u = synth_gcc_direct(sys, cx.cost, false, tight);
        if (!ok(u)) continue;  // keep instances where both variants exist
        SynthOutcome sres = synth_gcc_direct(sys, cx.cost, true, tight);
        if (!ok(sres)) {
            c.check(false, "random system " + std::to_string(tested) + ": structured feasible when unstructured is",
                    failure(sres).reason);
            ++tested;
            continue;
        }
        const double cs = result(sres).synthesis_cost;
        const double cu = result(u).synthesis_cost;
        c.check(cs <= cu + 1e-6, "random system " + std::to_string(tested) + ": structured <= unstructured + 1e-6",
                fmt(cs) + " vs " + fmt(cu));
        ++tested;
    }
    c.check(tested == 20, "20 random two/three-block systems exercised",
            std::to_string(tested) + " of 20 within " + std::to_string(attempts) + " attempts");
}

void criterion7(const Context& cx) {
    (void)cx;
    Criterion c(7, "sampled quadratic-form soundness of the structured uncertainty set");
    Rng rng(701);
    long total = 0, violations = 0;
    for (int loop = 0; loop < 10; ++loop) {
        const std::vector<UncertaintyBlock> st = {UncertaintyBlock{1, 1, 1}, UncertaintyBlock{2, 1, 1},
                                                  UncertaintyBlock{1, 2, 2}};
        const int nx = 3, nu = 2;
        const int np = structure_np(st), nq = structure_nq(st);
        Mat a = random_mat(nx, nx, rng);
        a = (0.7 / std::max(0.7, spectral_radius_est(a))) * a;
        Mat dzw = random_mat(nq, np, rng, 0.2);
        if (spectral_norm(dzw) >= 0.8) dzw = (0.5 / spectral_norm(dzw)) * dzw;
        UncertainSystem sys(a, random_mat(nx, nu, rng), Mat::identity(nx), random_mat(nx, np, rng, 0.5),
                            Mat::zeros(nx, np), random_mat(nq, nx, rng, 0.5), random_mat(nq, nu, rng, 0.3), dzw, st);
        const ClosedLoop cl = close_loop(sys, unit_cost(), random_mat(nu, nx, rng, 0.3));

        std::vector<AssembledMultipliers> mults;
        for (int m = 0; m < 10; ++m) {
            MultiplierSet ms;
            ms.structure = st;
            for (const auto& b : st) {
                const Mat g = random_mat(b.repeats, b.repeats, rng);
                ms.blocks.push_back(SymMat::from_mat(g * g.transpose(), 1e-9));
            }
            mults.push_back(assemble(ms));
        }
        std::vector<SymMat> smats;
        for (const auto& am : mults) smats.push_back(s_matrix(cl, am.lambda_p, am.lambda_q));

        for (int k = 0; k < 10000; ++k) {
            const DeltaRealization d = sample_delta(st, rng);
            std::vector<double> x = {rng.uniform_pm1(), rng.uniform_pm1(), rng.uniform_pm1()};
            const std::vector<double> xi = admissible_point(cl, st, x, d);
            double xi2 = 0.0;
            for (double v : xi) xi2 += v * v;
            for (const SymMat& s : smats) {
                ++total;
                double q = 0.0;
                for (int i = 0; i < s.dim(); ++i)
                    for (int j = 0; j < s.dim(); ++j) q += xi[i] * s.at(i, j) * xi[j];
                if (q > 1e-7 * (1.0 + xi2)) ++violations;
            }
        }
    }
    c.check(violations == 0, "xi' S xi <= 1e-7 (1 + |xi|^2) over 10 loops x 10^4 samples x 10 multipliers",
            std::to_string(violations) + " of " + std::to_string(total) + " violated");
}

void criterion8(const Context& cx) {
    (void)cx;
    Criterion c(8, "numerical kernel suite");
    Rng rng(801);

    {
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            const int p = 2 + static_cast<int>(rng.uniform01() * 3);
            const int q = 2 + static_cast<int>(rng.uniform01() * 3);
            const int r = 1 + static_cast<int>(rng.uniform01() * 3);
            const Mat x = random_mat(p, p, rng);
            const Mat y = random_mat(q, r, rng);
            const Mat lhs = kron(x, Mat::identity(q)) * kron(Mat::identity(p), y);
            const Mat rhs = kron(Mat::identity(p), y) * kron(x, Mat::identity(r));
            worst = std::max(worst, (lhs - rhs).max_abs());
        }
        c.check(worst <= 1e-12, "kronecker swap identity on randomized instances <= 1e-12", "worst " + fmt(worst));
    }
    {
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            SymMat s(8);
            for (int j = 0; j < 8; ++j)
                for (int i = j; i < 8; ++i) s.at(i, j) = 3.0 * rng.uniform_pm1();
            const EigSym e = eig_sym(s);
            Mat lam(8, 8);
            for (int i = 0; i < 8; ++i) lam(i, i) = e.values[i];
            const double scale = 1.0 + s.max_abs();
            worst = std::max(worst, (e.vectors * lam * e.vectors.transpose() - s.to_mat()).max_abs() / scale);
            worst = std::max(worst, (e.vectors.transpose() * e.vectors - Mat::identity(8)).max_abs());
        }
        c.check(worst < 1e-10, "eigendecomposition residuals < 1e-10", "worst " + fmt(worst));
    }
    {
        double worst = 0.0;
        for (int trial = 0; trial < 50; ++trial) {
            SymMat a(6), b(6);
            for (int j = 0; j < 6; ++j)
                for (int i = j; i < 6; ++i) {
                    a.at(i, j) = rng.uniform_pm1();
                    b.at(i, j) = rng.uniform_pm1();
                }
            const Mat ab = a.to_mat() * b.to_mat();
            double tr = 0.0;
            for (int i = 0; i < 6; ++i) tr += ab(i, i);
            worst = std::max(worst, std::abs(dot(svec(a), svec(b)) - tr) / (1.0 + std::abs(tr)));
        }
        c.check(worst <= 1e-12, "svec trace identity <= 1e-12", "worst " + fmt(worst));
    }
    {
        SdpProblem p;
        const MatVar x = p.add_mat_var(1, 1, "x");
        const int b = p.add_block(2, false);
        p.add_entry(b, 0, 0, x.index(0, 0), -1.0);
        p.add_entry(b, 1, 1, x.index(0, 0), -1.0);
        p.add_const(b, 0, 1, -1.0);
        p.set_objective(x.index(0, 0), 1.0);
        const SdpSolution sol = solve(p);
        c.check(sol.status == SdpStatus::Optimal && std::abs(sol.x[0] - 1.0) < 1e-5,
                "analytic 2x2 program recovers x* = 1", "measured " + fmt(sol.x[0]));
    }
    {
        // Export the flattened analytic program for external verification;
        // run csdp against it when the binary exists (optional, not gating).
        const std::string path = "/tmp/gcs_acceptance.dat-s";
        SdpProblem p;
        const MatVar x = p.add_mat_var(1, 1, "x");
        const int b = p.add_block(2, false);
        p.add_entry(b, 0, 0, x.index(0, 0), -1.0);
        p.add_entry(b, 1, 1, x.index(0, 0), -1.0);
        p.add_const(b, 0, 1, -1.0);
        p.set_objective(x.index(0, 0), 1.0);
        SolveOptions opts;
        const double offset = write_sdpa(p, opts, path);
        c.check(offset == 0.0, "sdpa export of the analytic program written", path);
        if (std::system("command -v csdp >/dev/null 2>&1") == 0) {
            const int rc = std::system(("csdp " + path + " /tmp/gcs_acceptance.sol > /tmp/gcs_csdp.log 2>&1").c_str());
            c.info(rc == 0 ? "csdp solved the exported problem (log at /tmp/gcs_csdp.log)"
                           : "csdp returned nonzero; see /tmp/gcs_csdp.log (not gating)");
        } else {
            c.info("external solver cross-check skipped (no csdp binary on PATH; not gating)");
        }
    }
}

}  // namespace

int main() {
    std::printf("acceptance suite: guaranteed-cost synthesis toolkit\n");
    std::printf("====================================================\n\n");

    Context cx;
    criterion1(cx);
    criterion2(cx);
    criterion3(cx);
    criterion4(cx);
    criterion5(cx);
    criterion6(cx);
    criterion7(cx);
    criterion8(cx);

    std::printf("====================================================\n");
    std::printf("%d of 8 criteria passed (%d individual checks failed)\n", 8 - criteria_failed, checks_failed);
    if (criteria_failed > 0)
        std::printf(
            "failed checks pin reference values that are not reproducible from the\n"
            "stated plant data; the measured values are cross-validated by an\n"
            "independent solver-free route (see README, 'Reference value deviations')\n");
    return criteria_failed == 0 ? 0 : 1;
}
