#pragma once

// Problem-file ingestion and report emission.
//
// Problems are JSON documents holding the plant matrices (row-major nested
// arrays of decimal numbers; NaN/Inf rejected by the parser), the
// uncertainty structure, the cost matrices, optional simulation defaults
// and an optional config section with numeric option overrides.

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "gcs/model.hpp"
#include "gcs/sdp.hpp"
#include "gcs/sim.hpp"
#include "gcs/synth.hpp"

#include "json.hpp"

namespace gcs {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct Problem {
    std::string name;
    UncertainSystem system;
    CostFunctional cost;
    SimConfig sim_defaults;           // filled from the optional "sim" section
    std::map<std::string, double> config;  // numeric overrides from "config"
    ValidationReport validation;      // produced at load time
};

/// Parses and validates a problem file.  Throws ParseError (naming the
/// offending field) on malformed input and on hard validation failures.
Problem load_problem(const std::string& path);
Problem problem_from_json(const nlohmann::json& j, const std::string& where);

/// Serialises a problem; load(save(p)) preserves every numeric field.
nlohmann::json problem_to_json(const Problem& p);
void save_problem(const Problem& p, const std::string& path);

// Conversions shared by the CLI and the tests.
Mat json_to_mat(const nlohmann::json& j, const std::string& field);
nlohmann::json mat_to_json(const Mat& m);
nlohmann::json sym_to_json(const SymMat& m);
SymMat json_to_sym(const nlohmann::json& j, const std::string& field);

/// Applies "config" overrides and --opt style key=value pairs to options.
void apply_option(SolveOptions& opts, const std::string& key, double value);

nlohmann::json solver_diag_json(const SdpSolution& sol);
nlohmann::json synthesis_report_json(const SynthesisResult& r, bool structured_label);
nlohmann::json simulation_report_json(const SimulationReport& r, const SimConfig& cfg);

/// Reads a gain (and optionally a certificate) from a synthesis report or a
/// bare {"gain": [...]} / {"certificate": [...]} document.
Mat read_gain(const std::string& path);
std::optional<SymMat> read_certificate(const std::string& path);

void write_json_file(const nlohmann::json& j, const std::string& path);

/// Formats a double with round-trip precision for CSV output.
std::string csv_number(double v);

}  // namespace gcs
