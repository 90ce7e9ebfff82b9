// Command-line front end: problem ingestion, synthesis method dispatch,
// certification, Monte Carlo simulation and the five-method comparison
// table.
//
// Exit codes: 0 success, 1 input or precondition error, 2 infeasible or
// not certifiable.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "gcs/problem_io.hpp"
#include "gcs/sim.hpp"
#include "gcs/synth.hpp"

namespace {

using namespace gcs;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInfeasible = 2;

struct CommonArgs {
    std::string input;
    std::vector<std::string> opts;  // key=value overrides
};

SynthOptions make_options(const Problem& p, const std::vector<std::string>& overrides) {
    SynthOptions o;
    for (const auto& [k, v] : p.config) apply_option(o.solve, k, v);
    for (const std::string& kv : overrides) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) throw ParseError("--opt expects key=value, got '" + kv + "'");
        apply_option(o.solve, kv.substr(0, eq), std::stod(kv.substr(eq + 1)));
    }
    return o;
}

SimConfig make_sim_config(const Problem& p, std::optional<int> runs, std::optional<int> horizon,
                          std::optional<std::uint64_t> seed, const std::string& x0) {
    SimConfig cfg = p.sim_defaults;
    if (runs) cfg.runs = *runs;
    if (horizon) cfg.horizon = *horizon;
    if (seed) cfg.seed = *seed;
    if (!x0.empty()) {
        if (x0 == "gaussian") {
            cfg.x0_mode = X0Mode::StandardGaussian;
        } else if (x0.rfind("fixed:", 0) == 0) {
            cfg.x0_mode = X0Mode::FixedVector;
            cfg.x0_fixed.clear();
            std::string rest = x0.substr(6);
            size_t start = 0;
            while (start <= rest.size()) {
                const size_t comma = rest.find(',', start);
                const std::string tok = rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
                if (!tok.empty()) cfg.x0_fixed.push_back(std::stod(tok));
                if (comma == std::string::npos) break;
                start = comma + 1;
            }
        } else {
            throw ParseError("--x0 expects 'gaussian' or 'fixed:v1,v2,...'");
        }
    }
    return cfg;
}

int cmd_validate(const std::string& input) {
    const Problem p = load_problem(input);  // throws on hard failure
    nlohmann::json j;
    j["name"] = p.name;
    j["well_posed"] = p.validation.well_posed;
    j["dzw_norm"] = p.validation.dzw_norm;
    j["feedthrough_ok"] = p.validation.feedthrough_ok;
    j["nominal_stabilizable"] = p.validation.nominal_stabilizable;
    j["nominal_observable"] = p.validation.nominal_observable;
    j["warnings"] = p.validation.warnings;
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_synth(const std::string& input, const std::string& method, const std::string& multiplier,
              const std::string& output, const std::vector<std::string>& overrides) {
    const Problem p = load_problem(input);
    const SynthOptions opts = make_options(p, overrides);
    const bool structured = multiplier != "unstructured";

    SynthesisResult res;
    if (method == "lqr") {
        res = lqr(p.system, p.cost);
    } else {
        SynthOutcome out = method == "gcc-lemma" ? synth_gcc_direct(p.system, p.cost, structured, opts)
                                                 : synth_gcc_dilated(p.system, p.cost, structured, opts);
        if (!ok(out)) {
            std::cerr << "no controller: " << failure(out).reason << "\n";
            return kExitInfeasible;
        }
        res = result(out);
    }

    const nlohmann::json report = synthesis_report_json(res, structured);
    if (output.empty())
        std::cout << report.dump(2) << "\n";
    else
        write_json_file(report, output);
    std::cerr << "synthesis cost tr(P) = " << res.synthesis_cost << "\n";
    return kExitOk;
}

int cmd_certify(const std::string& input, const std::string& gain_path, const std::string& output,
                const std::vector<std::string>& overrides) {
    const Problem p = load_problem(input);
    const Mat k = read_gain(gain_path);
    const SynthOptions opts = make_options(p, overrides);
    const CertifyOutcome out = certify(p.system, p.cost, k, opts);
    if (!certified(out)) {
        std::cerr << "not certifiable: " << std::get<NotCertifiable>(out).reason << "\n";
        return kExitInfeasible;
    }
    const Certificate& cert = std::get<Certificate>(out);
    nlohmann::json j;
    j["schema_version"] = 1;
    j["bound"] = cert.bound;
    j["certificate"] = sym_to_json(cert.p);
    nlohmann::json mults = nlohmann::json::array();
    for (const auto& b : cert.multipliers.blocks) mults.push_back(sym_to_json(b));
    j["multipliers"] = std::move(mults);
    j["solver"] = solver_diag_json(cert.solver);
    if (output.empty())
        std::cout << j.dump(2) << "\n";
    else
        write_json_file(j, output);
    std::cerr << "certified bound tr(P) = " << cert.bound << "\n";
    return kExitOk;
}

int cmd_simulate(const std::string& input, const std::string& gain_path, std::optional<int> runs,
                 std::optional<int> horizon, std::optional<std::uint64_t> seed, const std::string& x0,
                 const std::string& certificate_path, const std::string& output_csv, const std::string& report_path,
                 const std::string& traj_dir) {
    const Problem p = load_problem(input);
    const Mat k = read_gain(gain_path);
    SimConfig cfg = make_sim_config(p, runs, horizon, seed, x0);
    if (!traj_dir.empty()) {
        cfg.record_trajectories = true;
        cfg.trajectory_dir = traj_dir;
    }
    std::optional<SymMat> cert;
    if (!certificate_path.empty()) cert = read_certificate(certificate_path);

    const SimulationReport rep = run(p.system, p.cost, k, cfg, cert);

    if (!output_csv.empty()) {
        std::ofstream csv(output_csv);
        if (!csv) throw std::runtime_error("cannot open " + output_csv);
        csv << "run,cost,bound_ok\n";
        for (size_t r = 0; r < rep.per_run_costs.size(); ++r) {
            std::string bound_ok = "n/a";
            if (cert) {
                double b = 0.0;
                for (int i = 0; i < cert->dim(); ++i)
                    for (int j = 0; j < cert->dim(); ++j) b += rep.per_run_x0[r][i] * cert->at(i, j) * rep.per_run_x0[r][j];
                bound_ok = rep.per_run_costs[r] <= b * (1.0 + 1e-6) + 1e-9 ? "1" : "0";
            }
            csv << r << "," << csv_number(rep.per_run_costs[r]) << "," << bound_ok << "\n";
        }
    }
    const nlohmann::json j = simulation_report_json(rep, cfg);
    if (report_path.empty())
        std::cout << j.dump(2) << "\n";
    else
        write_json_file(j, report_path);
    return kExitOk;
}

int cmd_compare(const std::string& input, const std::string& output, std::optional<int> runs,
                std::optional<int> horizon, std::optional<std::uint64_t> seed,
                const std::vector<std::string>& overrides) {
    const Problem p = load_problem(input);
    const SynthOptions opts = make_options(p, overrides);
    const SimConfig cfg = make_sim_config(p, runs, horizon, seed, "");

    struct Row {
        std::string method;
        std::string synthesis_cost = "n/a";
        std::string effective_cost = "n/a";
        std::string ci95 = "n/a";
        std::string certified = "n/a";
        std::string note;
    };
    std::vector<Row> rows;

    auto simulate_gain = [&](const Mat& k, const std::optional<SymMat>& cert, Row& row) {
        const SimulationReport rep = run(p.system, p.cost, k, cfg, cert);
        row.effective_cost = csv_number(rep.effective_cost);
        row.ci95 = csv_number(rep.ci95_halfwidth);
        if (rep.divergent_runs > 0) row.note = std::to_string(rep.divergent_runs) + " divergent runs";
    };
    auto certify_gain = [&](const Mat& k, Row& row) {
        const CertifyOutcome out = certify(p.system, p.cost, k, opts);
        row.certified = certified(out) ? "yes" : "no";
    };

    {
        Row row;
        row.method = "lqr";
        const Mat eye = Mat::identity(p.system.nx());
        if (p.system.ny() != p.system.nx() || (p.system.cy() - eye).max_abs() != 0.0) {
            row.note = "requires state feedback";
        } else {
            try {
                const SynthesisResult res = lqr(p.system, p.cost);
                row.synthesis_cost = csv_number(res.synthesis_cost);
                simulate_gain(res.k, std::nullopt, row);
                certify_gain(res.k, row);
            } catch (const std::exception& e) {
                row.note = e.what();
            }
        }
        rows.push_back(row);
    }

    const struct {
        const char* name;
        bool dilated;
        bool structured;
    } methods[] = {
        {"gcc-lemma-unstructured", false, false},
        {"gcc-dilated-unstructured", true, false},
        {"gcc-lemma-structured", false, true},
        {"gcc-dilated-structured", true, true},
    };
    for (const auto& m : methods) {
        Row row;
        row.method = m.name;
        try {
            SynthOutcome out = m.dilated ? synth_gcc_dilated(p.system, p.cost, m.structured, opts)
                                         : synth_gcc_direct(p.system, p.cost, m.structured, opts);
            if (!ok(out)) {
                row.note = failure(out).reason;
            } else {
                const SynthesisResult& res = result(out);
                row.synthesis_cost = csv_number(res.synthesis_cost);
                simulate_gain(res.k, res.p, row);
                certify_gain(res.k, row);
            }
        } catch (const std::exception& e) {
            row.note = e.what();
        }
        rows.push_back(row);
    }

    std::ofstream csv(output);
    if (!csv) throw std::runtime_error("cannot open " + output);
    csv << "method,synthesis_cost,effective_cost,ci95,certified,note\n";
    for (const Row& r : rows)
        csv << r.method << "," << r.synthesis_cost << "," << r.effective_cost << "," << r.ci95 << "," << r.certified
            << ",\"" << r.note << "\"\n";
    std::cerr << "wrote " << output << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"guaranteed-cost controller synthesis toolkit"};
    app.require_subcommand(1);

    std::string input, method = "gcc-dilated", multiplier = "structured", output, gain, certificate, report, x0,
                traj_dir;
    std::vector<std::string> overrides;
    std::optional<int> runs, horizon;
    std::optional<std::uint64_t> seed;

    CLI::App* validate_cmd = app.add_subcommand("validate", "check a problem file against the model assumptions");
    validate_cmd->add_option("input", input)->required();

    CLI::App* synth_cmd = app.add_subcommand("synth", "synthesize a controller and write a report");
    synth_cmd->add_option("input", input)->required();
    synth_cmd->add_option("--method", method)->check(CLI::IsMember({"lqr", "gcc-lemma", "gcc-dilated"}));
    synth_cmd->add_option("--multiplier", multiplier)->check(CLI::IsMember({"structured", "unstructured"}));
    synth_cmd->add_option("--output", output);
    synth_cmd->add_option("--opt", overrides);

    CLI::App* certify_cmd = app.add_subcommand("certify", "minimal-trace certificate for a fixed gain");
    certify_cmd->add_option("input", input)->required();
    certify_cmd->add_option("--gain", gain)->required();
    certify_cmd->add_option("--output", output);
    certify_cmd->add_option("--opt", overrides);

    CLI::App* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo closed-loop cost estimation");
    simulate_cmd->add_option("input", input)->required();
    simulate_cmd->add_option("--gain", gain)->required();
    simulate_cmd->add_option("--runs", runs);
    simulate_cmd->add_option("--horizon", horizon);
    simulate_cmd->add_option("--seed", seed);
    simulate_cmd->add_option("--x0", x0);
    simulate_cmd->add_option("--certificate", certificate);
    simulate_cmd->add_option("--output", output);
    simulate_cmd->add_option("--report", report);
    simulate_cmd->add_option("--trajectories", traj_dir);

    CLI::App* compare_cmd = app.add_subcommand("compare", "five-method synthesis and simulation table");
    compare_cmd->add_option("input", input)->required();
    compare_cmd->add_option("--output", output)->required();
    compare_cmd->add_option("--runs", runs);
    compare_cmd->add_option("--horizon", horizon);
    compare_cmd->add_option("--seed", seed);
    compare_cmd->add_option("--opt", overrides);

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate_cmd->parsed()) return cmd_validate(input);
        if (synth_cmd->parsed()) return cmd_synth(input, method, multiplier, output, overrides);
        if (certify_cmd->parsed()) return cmd_certify(input, gain, output, overrides);
        if (simulate_cmd->parsed())
            return cmd_simulate(input, gain, runs, horizon, seed, x0, certificate, output, report, traj_dir);
        if (compare_cmd->parsed()) return cmd_compare(input, output, runs, horizon, seed, overrides);
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}
