#pragma once

// Deterministic circuit inspection: truth-table compliance, temporal trace
// expectations, redundancy, grammar, and a 1-5 score.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fluidc/fchdl.hpp"
#include "fluidc/simulator.hpp"
#include "json.hpp"

namespace fluidc {

struct TruthTableRow {
  std::map<std::string, int> inputs;
  std::map<std::string, int> outputs;
  /// Seconds to hold the inputs before sampling (timed circuits).
  std::optional<double> hold;
};

struct TruthTableSpec {
  std::vector<std::string> input_nets;
  std::vector<std::string> output_nets;
  std::vector<TruthTableRow> rows;

  bool complete() const;
  /// Throws BadRequest on duplicate assignments or rows missing a listed net.
  void validate() const;
};

struct Expectation {
  double t = 0.0;
  std::string net;
  int v = 0;
  double w = 0.0;
};

struct TemporalSpec {
  Stimulus stimulus;
  std::vector<Expectation> expectations;
};

enum class FindingKind { Mismatch, Hint, Grammar, GrammarWarning, Redundancy, Temporal, Lint };

struct Finding {
  FindingKind kind;
  std::string message;
  std::optional<std::size_t> row;
  std::optional<std::size_t> op;
  std::optional<std::string> net;
};

std::vector<Finding> check_truth_table(const Netlist& netlist, const TruthTableSpec& spec,
                                       const SimConfig& config = {});
std::vector<Finding> check_temporal(const Netlist& netlist, const TemporalSpec& spec,
                                    const SimConfig& config = {});
std::vector<std::size_t> find_redundant(const Netlist& netlist);

/// Settled net values for one row; exposed for oracle tests.
std::map<std::string, int> evaluate_row(const Netlist& netlist, const TruthTableRow& row, const SimConfig& config,
                                        const std::map<std::string, bool>& invert = {});

struct InspectionReport {
  std::vector<Finding> truth_table_findings;
  std::vector<Finding> grammar_findings;
  std::vector<Finding> redundancy_findings;
  std::vector<Finding> other_findings;
  int score = 1;
  bool pass = false;

  std::size_t mismatches() const;
  /// Review text in the "1.Truth Table ... 2.Circuit Components ... 3. Circuit Errors" layout.
  std::string review() const;
};

/// Score table. Grammar errors dominate, then truth-table mismatch counts,
/// then any warning-level finding.
struct ScoreRubric {
  int grammar_error = 1;
  int many_mismatches = 2;
  int one_mismatch = 3;
  int warnings_only = 4;
  int clean = 5;
  int pass_threshold = 4;

  int score(bool grammar_errors, std::size_t mismatches, bool warnings) const;
};

InspectionReport inspect(const Netlist& netlist, const std::optional<TruthTableSpec>& spec,
                         const SimConfig& config = {}, const ScoreRubric& rubric = {});
/// Same as inspect() but starts from source text; parse failures score as
/// grammar errors instead of throwing.
InspectionReport inspect_circuit(std::string_view circuit,
                                 const std::optional<TruthTableSpec>& spec,
                                 const SimConfig& config = {}, const ScoreRubric& rubric = {});

/// Best-effort reading of "If A = 1 and B = 0, then Q = 1; ..." rows.
std::optional<TruthTableSpec> parse_truth_table_text(std::string_view text);

nlohmann::json truth_table_to_json(const TruthTableSpec& spec);
TruthTableSpec truth_table_from_json(const nlohmann::json& j);
nlohmann::json temporal_to_json(const TemporalSpec& spec);
TemporalSpec temporal_from_json(const nlohmann::json& j);
nlohmann::json finding_to_json(const Finding& f);
nlohmann::json findings_to_json(const std::vector<Finding>& findings);
nlohmann::json report_to_json(const InspectionReport& report);

}  // namespace fluidc
