#include "gcs/problem_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace gcs {

using nlohmann::json;

namespace {

const json& member(const json& j, const std::string& key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(where + ": missing field '" + key + "'");
    return *it;
}

double number_at(const json& j, const std::string& where) {
    if (!j.is_number()) throw ParseError(where + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ParseError(where + ": non-finite number");
    return v;
}

}  // namespace

Mat json_to_mat(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ParseError(field + ": expected a non-empty nested array (row-major matrix)");
    const int rows = static_cast<int>(j.size());
    const int cols = static_cast<int>(j[0].size());
    if (cols == 0) throw ParseError(field + ": rows must be non-empty");
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != cols)
            throw ParseError(field + ": ragged row " + std::to_string(i));
        for (int c = 0; c < cols; ++c) m(i, c) = number_at(j[i][c], field);
    }
    return m;
}

json mat_to_json(const Mat& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json sym_to_json(const SymMat& m) { return mat_to_json(m.to_mat()); }

SymMat json_to_sym(const json& j, const std::string& field) {
    const Mat m = json_to_mat(j, field);
    if (m.rows() != m.cols()) throw ParseError(field + ": expected a square matrix");
    try {
        return SymMat::from_mat(m, 1e-9);
    } catch (const std::invalid_argument& e) {
        throw ParseError(field + ": " + e.what());
    }
}

Problem problem_from_json(const json& j, const std::string& where) {
    const json& jsys = member(j, "system", where);
    const json& jstruct = member(j, "structure", where);
    const json& jcost = member(j, "cost", where);
    if (!jstruct.is_array()) throw ParseError(where + ": 'structure' must be an array");

    std::vector<UncertaintyBlock> structure;
    for (size_t i = 0; i < jstruct.size(); ++i) {
        const std::string bf = where + ": structure[" + std::to_string(i) + "]";
        UncertaintyBlock b;
        b.repeats = static_cast<int>(number_at(member(jstruct[i], "repeats", bf), bf + ".repeats"));
        b.rows = static_cast<int>(number_at(member(jstruct[i], "rows", bf), bf + ".rows"));
        b.cols = static_cast<int>(number_at(member(jstruct[i], "cols", bf), bf + ".cols"));
        structure.push_back(b);
    }

    const Mat a = json_to_mat(member(jsys, "a", where + ".system"), where + ".system.a");
    const Mat bu = json_to_mat(member(jsys, "bu", where + ".system"), where + ".system.bu");
    const Mat cy = json_to_mat(member(jsys, "cy", where + ".system"), where + ".system.cy");

    std::optional<UncertainSystem> sys;
    try {
        if (structure.empty()) {
            for (const char* key : {"bw", "dyw", "cz", "dzu", "dzw"})
                if (jsys.contains(key))
                    throw ParseError(where + ".system." + key + ": present but the structure list is empty");
            sys = UncertainSystem::certain(a, bu, cy);
        } else {
            sys = UncertainSystem(
                a, bu, cy, json_to_mat(member(jsys, "bw", where + ".system"), where + ".system.bw"),
                json_to_mat(member(jsys, "dyw", where + ".system"), where + ".system.dyw"),
                json_to_mat(member(jsys, "cz", where + ".system"), where + ".system.cz"),
                json_to_mat(member(jsys, "dzu", where + ".system"), where + ".system.dzu"),
                json_to_mat(member(jsys, "dzw", where + ".system"), where + ".system.dzw"), structure);
        }
    } catch (const std::invalid_argument& e) {
        throw ParseError(where + ".system: " + e.what());
    }

    const SymMat q = json_to_sym(member(jcost, "q", where + ".cost"), where + ".cost.q");
    const SymMat r = json_to_sym(member(jcost, "r", where + ".cost"), where + ".cost.r");
    Mat n(q.dim(), r.dim());
    if (jcost.contains("n")) n = json_to_mat(jcost["n"], where + ".cost.n");

    std::optional<CostFunctional> cost;
    try {
        cost = CostFunctional(q, n, r);
    } catch (const std::exception& e) {
        throw ParseError(where + ".cost: " + std::string(e.what()));
    }

    Problem p{j.value("name", std::string("problem")), std::move(*sys), std::move(*cost), {}, {}, {}};

    if (j.contains("sim")) {
        const json& js = j["sim"];
        if (js.contains("runs")) p.sim_defaults.runs = static_cast<int>(number_at(js["runs"], where + ".sim.runs"));
        if (js.contains("horizon"))
            p.sim_defaults.horizon = static_cast<int>(number_at(js["horizon"], where + ".sim.horizon"));
        if (js.contains("seed"))
            p.sim_defaults.seed = static_cast<std::uint64_t>(number_at(js["seed"], where + ".sim.seed"));
        if (js.contains("x0")) {
            const std::string x0 = js["x0"].get<std::string>();
            if (x0 == "gaussian") {
                p.sim_defaults.x0_mode = X0Mode::StandardGaussian;
            } else if (x0.rfind("fixed:", 0) == 0) {
                p.sim_defaults.x0_mode = X0Mode::FixedVector;
                const std::string rest = x0.substr(6);
                size_t start = 0;
                while (start <= rest.size()) {
                    const size_t comma = rest.find(',', start);
                    const std::string tok =
                        rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
                    if (!tok.empty()) p.sim_defaults.x0_fixed.push_back(std::stod(tok));
                    if (comma == std::string::npos) break;
                    start = comma + 1;
                }
            } else {
                throw ParseError(where + ".sim.x0: expected 'gaussian' or 'fixed:v1,v2,...'");
            }
        }
    }

    if (j.contains("config")) {
        for (const auto& [key, val] : j["config"].items())
            p.config[key] = number_at(val, where + ".config." + key);
    }

    p.validation = validate(p.system, p.cost);
    if (!p.validation.hard_ok()) {
        std::string msg = where + ": validation failed:";
        for (const auto& e : p.validation.errors) msg += " " + e;
        throw ParseError(msg);
    }
    return p;
}

Problem load_problem(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return problem_from_json(j, path);
}

json problem_to_json(const Problem& p) {
    json j;
    j["name"] = p.name;
    json sys;
    sys["a"] = mat_to_json(p.system.a());
    sys["bu"] = mat_to_json(p.system.bu());
    sys["cy"] = mat_to_json(p.system.cy());
    if (p.system.has_uncertainty()) {
        sys["bw"] = mat_to_json(p.system.bw());
        sys["dyw"] = mat_to_json(p.system.dyw());
        sys["cz"] = mat_to_json(p.system.cz());
        sys["dzu"] = mat_to_json(p.system.dzu());
        sys["dzw"] = mat_to_json(p.system.dzw());
    }
    j["system"] = std::move(sys);
    json st = json::array();
    for (const auto& b : p.system.structure())
        st.push_back({{"repeats", b.repeats}, {"rows", b.rows}, {"cols", b.cols}});
    j["structure"] = std::move(st);
    j["cost"] = {{"q", sym_to_json(p.cost.q())}, {"n", mat_to_json(p.cost.n())}, {"r", sym_to_json(p.cost.r())}};
    if (!p.config.empty()) j["config"] = p.config;
    return j;
}

void save_problem(const Problem& p, const std::string& path) { write_json_file(problem_to_json(p), path); }

void apply_option(SolveOptions& opts, const std::string& key, double value) {
    if (key == "margin_base") opts.margin_base = value;
    else if (key == "gap_tol") opts.gap_tol = value;
    else if (key == "newton_tol") opts.newton_tol = value;
    else if (key == "feas_tol") opts.feas_tol = value;
    else if (key == "max_outer") opts.max_outer = static_cast<int>(value);
    else if (key == "max_newton_total") opts.max_newton_total = static_cast<int>(value);
    else if (key == "max_newton_center") opts.max_newton_center = static_cast<int>(value);
    else if (key == "max_linesearch") opts.max_linesearch = static_cast<int>(value);
    else if (key == "t_mult") opts.t_mult = value;
    else if (key == "parallel") opts.parallel = value != 0.0;
    else if (key == "reference_kernel") opts.reference_kernel = value != 0.0;
    else throw ParseError("unknown option '" + key + "'");
}

json solver_diag_json(const SdpSolution& sol) {
    return {{"status", to_string(sol.status)},
            {"iterations", sol.iterations},
            {"gap", sol.gap_estimate},
            {"objective", sol.objective_value},
            {"max_constraint_eig", sol.max_constraint_eig},
            {"message", sol.message}};
}

json synthesis_report_json(const SynthesisResult& r, bool structured_label) {
    json j;
    j["schema_version"] = 1;
    j["method"] = to_string(r.method);
    j["multiplier"] = structured_label ? "structured" : "unstructured";
    j["synthesis_cost"] = r.synthesis_cost;
    j["gain"] = mat_to_json(r.k);
    j["certificate"] = sym_to_json(r.p);
    json mults = json::array();
    for (const auto& b : r.multipliers.blocks) mults.push_back(sym_to_json(b));
    j["multipliers"] = std::move(mults);
    j["solver"] = solver_diag_json(r.solver);
    return j;
}

json simulation_report_json(const SimulationReport& r, const SimConfig& cfg) {
    json j;
    j["schema_version"] = 1;
    j["runs"] = cfg.runs;
    j["horizon"] = cfg.horizon;
    j["seed"] = cfg.seed;
    j["effective_cost"] = r.effective_cost;
    j["ci95_halfwidth"] = r.ci95_halfwidth;
    j["bound_violations"] = r.bound_violations;
    j["lyapunov_violations"] = r.lyapunov_violations;
    j["divergent_runs"] = r.divergent_runs;
    j["max_state_norm"] = std::isfinite(r.max_state_norm) ? json(r.max_state_norm) : json("inf");
    return j;
}

Mat read_gain(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return json_to_mat(member(j, "gain", path), path + ".gain");
}

std::optional<SymMat> read_certificate(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    if (!j.contains("certificate")) return std::nullopt;
    return json_to_sym(j["certificate"], path + ".certificate");
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

std::string csv_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace gcs
