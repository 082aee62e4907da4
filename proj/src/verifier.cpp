#include "fluidc/verifier.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <set>
#include <sstream>

#include "fluidc/error.hpp"

namespace fluidc {

namespace {

std::string assignment_text(const std::map<std::string, int>& values,
                            const std::vector<std::string>& order) {
  std::string s;
  for (const auto& n : order) {
    auto it = values.find(n);
    if (it == values.end()) continue;
    if (!s.empty()) s += ", ";
    s += n + "=" + std::to_string(it->second);
  }
  return s;
}

// "A" -> "Input A"; names already carrying a port prefix are kept.
std::string port_label(const std::string& net) {
  if (net.rfind("Input", 0) == 0) return net;
  return "Input " + net;
}

double default_hold(const Netlist& netlist, const SimConfig& config) {
  double max_timer = 0.0;
  double max_other = 0.0;
  for (const auto& op : netlist.operators()) {
    if (op.kind == OperatorKind::Timer) max_timer = std::max(max_timer, op.params[0]);
    if (op.kind == OperatorKind::EdgeDetector) max_other = std::max(max_other, op.params[0]);
    if (op.kind == OperatorKind::Filter) max_other = std::max(max_other, 3.0 / op.params[0]);
  }
  const double base = max_timer > 0.0 ? max_timer : max_other;
  return 2.0 * base * config.time_scale;
}

void require_nets(const Netlist& netlist, const std::vector<std::string>& nets) {
  for (const auto& n : nets) {
    if (!netlist.nets().count(n))
      throw Error(ErrorCode::SpecNetUnknown, "spec references unknown net '" + n + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

bool TruthTableSpec::complete() const {
  if (input_nets.size() >= 31) return false;
  std::set<std::map<std::string, int>> seen;
  for (const auto& r : rows) seen.insert(r.inputs);
  return seen.size() == (std::size_t{1} << input_nets.size());
}

void TruthTableSpec::validate() const {
  std::set<std::map<std::string, int>> seen;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    for (const auto& n : input_nets) {
      if (!r.inputs.count(n))
        throw Error(ErrorCode::BadRequest, "row " + std::to_string(i) + " misses input '" + n + "'");
    }
    for (const auto& n : output_nets) {
      if (!r.outputs.count(n))
        throw Error(ErrorCode::BadRequest, "row " + std::to_string(i) + " misses output '" + n + "'");
    }
    for (const auto& [n, v] : r.inputs) {
      if (v != 0 && v != 1) throw Error(ErrorCode::BadRequest, "row values must be 0 or 1");
    }
    for (const auto& [n, v] : r.outputs) {
      if (v != 0 && v != 1) throw Error(ErrorCode::BadRequest, "row values must be 0 or 1");
    }
    if (!seen.insert(r.inputs).second)
      throw Error(ErrorCode::BadRequest, "duplicate input assignment in row " + std::to_string(i));
  }
}

std::map<std::string, int> evaluate_row(const Netlist& netlist, const TruthTableRow& row, const SimConfig& config,
                                        const std::map<std::string, bool>& invert) {
  Simulator sim(netlist, config);
  for (const auto& [net, v] : row.inputs) {
    auto inv = invert.find(net);
    const int value = (inv != invert.end() && inv->second) ? 1 - v : v;
    sim.set_input(net, value);
  }
  const bool timed = netlist.has_timed_operators();
  const double hold = row.hold ? *row.hold : (timed ? default_hold(netlist, config) : 0.0);
  sim.settle_now();
  if (hold > 0.0) {
    const auto ticks = static_cast<long long>(std::ceil(hold / config.dt - 1e-9));
    for (long long k = 1; k <= ticks; ++k) sim.advance_to(static_cast<double>(k) * config.dt);
  }
  return sim.values();
}

std::vector<Finding> check_truth_table(const Netlist& netlist, const TruthTableSpec& spec,
                                       const SimConfig& config) {
  require_nets(netlist, spec.input_nets);
  require_nets(netlist, spec.output_nets);
  for (const auto& r : spec.rows) {
    for (const auto& [n, v] : r.inputs) require_nets(netlist, {n});
    for (const auto& [n, v] : r.outputs) require_nets(netlist, {n});
  }

  std::vector<std::string> in_order = spec.input_nets;
  std::vector<std::string> out_order = spec.output_nets;
  for (const auto& r : spec.rows) {
    for (const auto& [n, v] : r.inputs) {
      if (std::find(in_order.begin(), in_order.end(), n) == in_order.end()) in_order.push_back(n);
    }
    for (const auto& [n, v] : r.outputs) {
      if (std::find(out_order.begin(), out_order.end(), n) == out_order.end()) out_order.push_back(n);
    }
  }

  std::vector<Finding> findings;
  for (std::size_t i = 0; i < spec.rows.size(); ++i) {
    const auto& row = spec.rows[i];
    std::map<std::string, int> actual;
    try {
      actual = evaluate_row(netlist, row, config);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OscillationError) throw;
      findings.push_back({FindingKind::Mismatch,
                          "row " + std::to_string(i) + " (" + assignment_text(row.inputs, in_order) +
                              "): circuit does not settle: " + e.what(),
                          i, std::nullopt, std::nullopt});
      continue;
    }
    std::map<std::string, int> wrong;
    for (const auto& [n, expected] : row.outputs) {
      if (actual.at(n) != expected) wrong[n] = actual.at(n);
    }
    if (!wrong.empty()) {
      findings.push_back({FindingKind::Mismatch,
                          "row " + std::to_string(i) + ": with " +
                              assignment_text(row.inputs, in_order) + " expected " +
                              assignment_text(row.outputs, out_order) + " but circuit gives " +
                              assignment_text(wrong, out_order),
                          i, std::nullopt, wrong.begin()->first});
    }
  }

  // When the only problem is input polarity, say which inputs to invert.
  const std::size_t n = in_order.size();
  if (!findings.empty() && n > 0 && n <= 10) {
    std::vector<unsigned> masks;
    for (unsigned m = 1; m < (1u << n); ++m) masks.push_back(m);
    std::stable_sort(masks.begin(), masks.end(), [](unsigned a, unsigned b) {
      return __builtin_popcount(a) < __builtin_popcount(b);
    });
    for (unsigned m : masks) {
      std::map<std::string, bool> inv;
      for (std::size_t k = 0; k < n; ++k) inv[in_order[k]] = (m >> k) & 1u;
      bool all = true;
      for (const auto& row : spec.rows) {
        try {
          auto actual = evaluate_row(netlist, row, config, inv);
          for (const auto& [net, expected] : row.outputs) {
            if (actual.at(net) != expected) all = false;
          }
        } catch (const Error&) {
          all = false;
        }
        if (!all) break;
      }
      if (!all) continue;
      std::vector<std::string> labels;
      for (std::size_t k = 0; k < n; ++k) {
        if ((m >> k) & 1u) labels.push_back(port_label(in_order[k]));
      }
      std::string joined;
      for (std::size_t k = 0; k < labels.size(); ++k) {
        if (k > 0) joined += (k + 1 == labels.size()) ? " and " : ", ";
        joined += labels[k];
      }
      findings.push_back({FindingKind::Hint,
                          "inverting " + joined + " makes every row match",
                          std::nullopt, std::nullopt, std::nullopt});
      break;
    }
  }
  return findings;
}

std::vector<Finding> check_temporal(const Netlist& netlist, const TemporalSpec& spec,
                                    const SimConfig& config) {
  for (const auto& e : spec.stimulus) require_nets(netlist, {e.net});
  for (const auto& x : spec.expectations) require_nets(netlist, {x.net});

  double horizon = config.dt;
  for (const auto& x : spec.expectations) horizon = std::max(horizon, x.t + x.w + config.dt);
  for (const auto& e : spec.stimulus) horizon = std::max(horizon, e.t + config.dt);
  const Trace trace = run(netlist, spec.stimulus, horizon, config);

  std::vector<Finding> findings;
  for (const auto& x : spec.expectations) {
    const double w = std::max(x.w, config.dt);
    bool held = false;
    std::string excerpt;
    for (const auto& s : trace.samples) {
      if (s.t < x.t - w - 1e-9 || s.t > x.t + w + 1e-9) continue;
      const int v = s.values.at(x.net);
      if (v == x.v) held = true;
      excerpt += (excerpt.empty() ? "" : " ") + format_number(s.t) + ":" + std::to_string(v);
    }
    if (!held) {
      findings.push_back({FindingKind::Temporal,
                          "expected " + x.net + "=" + std::to_string(x.v) + " near t=" +
                              format_number(x.t) + " (window " + format_number(w) +
                              " s); observed " + excerpt,
                          std::nullopt, std::nullopt, x.net});
    }
  }
  return findings;
}

std::vector<std::size_t> find_redundant(const Netlist& netlist) {
  std::vector<std::size_t> out;
  for (const auto& d : netlist.diagnostics()) {
    if (d.code == DiagnosticCode::UnreachableOperator) out.push_back(d.operators.front());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------

std::size_t InspectionReport::mismatches() const {
  return static_cast<std::size_t>(
      std::count_if(truth_table_findings.begin(), truth_table_findings.end(),
                    [](const Finding& f) { return f.kind == FindingKind::Mismatch; }));
}

std::string InspectionReport::review() const {
  auto section = [](const std::vector<Finding>& fs, const char* none) {
    if (fs.empty()) return std::string(none);
    std::string s;
    for (const auto& f : fs) s += (s.empty() ? "" : " ") + f.message + ";";
    return s;
  };
  std::vector<Finding> components = redundancy_findings;
  std::vector<Finding> errors = grammar_findings;
  errors.insert(errors.end(), other_findings.begin(), other_findings.end());
  return "1.Truth Table: " +
         section(truth_table_findings, "the circuit meets every truth table row;") +
         " 2.Circuit Components: " +
         section(components, "every operator contributes to an output;") +
         " 3. Circuit Errors: " + section(errors, "none found.");
}

int ScoreRubric::score(bool grammar_errors, std::size_t mismatches, bool warnings) const {
  if (grammar_errors) return grammar_error;
  if (mismatches >= 2) return many_mismatches;
  if (mismatches == 1) return one_mismatch;
  if (warnings) return warnings_only;
  return clean;
}

namespace {

void finish(InspectionReport& r, const ScoreRubric& rubric) {
  const bool grammar_errors =
      std::any_of(r.grammar_findings.begin(), r.grammar_findings.end(),
                  [](const Finding& f) { return f.kind == FindingKind::Grammar; });
  const bool warnings = !r.redundancy_findings.empty() || !r.other_findings.empty() ||
                        !r.grammar_findings.empty() || !r.truth_table_findings.empty();
  r.score = rubric.score(grammar_errors, r.mismatches(), warnings);
  r.pass = r.score >= rubric.pass_threshold;
}

}  // namespace

InspectionReport inspect(const Netlist& netlist, const std::optional<TruthTableSpec>& spec,
                         const SimConfig& config, const ScoreRubric& rubric) {
  InspectionReport r;
  for (const auto& d : netlist.diagnostics()) {
    if (d.code == DiagnosticCode::UnreachableOperator) continue;
    r.grammar_findings.push_back(
        {d.severity == Severity::Error ? FindingKind::Grammar : FindingKind::GrammarWarning,
         std::string(to_string(d.code)) + ": " + d.message,
         std::nullopt,
         d.operators.empty() ? std::nullopt : std::optional<std::size_t>(d.operators.front()),
         d.nets.empty() ? std::nullopt : std::optional<std::string>(d.nets.front())});
  }
  for (std::size_t id : find_redundant(netlist)) {
    const auto& op = netlist.operators()[id];
    r.redundancy_findings.push_back(
        {FindingKind::Redundancy,
         "operator " + std::to_string(id) + " " + serialize_operator(op) +
             " does not contribute to any output",
         std::nullopt, id, std::nullopt});
  }
  for (const auto& op : netlist.operators()) {
    if (op.kind == OperatorKind::Diode && netlist.primary_inputs().count(op.inputs[0])) {
      r.other_findings.push_back(
          {FindingKind::Lint,
           "Diode " + std::to_string(op.id) + " is fed directly by input '" + op.inputs[0] +
               "'; an input airbag signals but cannot supply continuous airflow",
           std::nullopt, op.id, op.inputs[0]});
    }
  }
  if (spec && !has_errors(netlist.diagnostics())) {
    try {
      r.truth_table_findings = check_truth_table(netlist, *spec, config);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SpecNetUnknown && e.code() != ErrorCode::NotAnInput) throw;
      r.truth_table_findings.push_back({FindingKind::Mismatch,
                                        std::string("truth table cannot be applied: ") + e.what(),
                                        std::nullopt, std::nullopt, std::nullopt});
    }
  }
  finish(r, rubric);
  return r;
}

InspectionReport inspect_circuit(std::string_view circuit,
                                 const std::optional<TruthTableSpec>& spec,
                                 const SimConfig& config, const ScoreRubric& rubric) {
  try {
    return inspect(parse_circuit(circuit), spec, config, rubric);
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::EmptyCircuit:
      case ErrorCode::SyntaxError:
      case ErrorCode::UnknownOperator:
      case ErrorCode::ArityError:
      case ErrorCode::BadParameter:
      case ErrorCode::InvalidNetlist:
        break;
      default:
        throw;
    }
    InspectionReport r;
    r.grammar_findings.push_back({FindingKind::Grammar,
                                  std::string(to_string(e.code())) + ": " + e.what(),
                                  std::nullopt, std::nullopt, std::nullopt});
    finish(r, rubric);
    return r;
  }
}

// ---------------------------------------------------------------------------

std::optional<TruthTableSpec> parse_truth_table_text(std::string_view text) {
  static const std::regex clause_re(R"(^\s*if\s+(.+?)\s*,?\s+then\s+(.+?)\s*$)",
                                    std::regex::icase);
  static const std::regex assign_re(R"(^\s*(.+?)\s*=\s*([01])\s*$)");
  static const std::regex split_re(R"(\s+and\s+|,)", std::regex::icase);

  auto assignments = [&](const std::string& s) -> std::optional<std::map<std::string, int>> {
    std::map<std::string, int> out;
    std::sregex_token_iterator it(s.begin(), s.end(), split_re, -1), end;
    for (; it != end; ++it) {
      std::string part = *it;
      if (part.find_first_not_of(" \t") == std::string::npos) continue;
      std::smatch m;
      if (!std::regex_match(part, m, assign_re)) return std::nullopt;
      out[m[1].str()] = m[2].str() == "1" ? 1 : 0;
    }
    if (out.empty()) return std::nullopt;
    return out;
  };

  TruthTableSpec spec;
  std::string all(text);
  std::size_t start = 0;
  while (start <= all.size()) {
    std::size_t end = all.find_first_of(";\n", start);
    if (end == std::string::npos) end = all.size();
    std::string clause = all.substr(start, end - start);
    start = end + 1;
    while (!clause.empty() && (clause.back() == '.' || clause.back() == ' ')) clause.pop_back();
    if (clause.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::smatch m;
    if (!std::regex_match(clause, m, clause_re)) return std::nullopt;
    auto in = assignments(m[1].str());
    auto out = assignments(m[2].str());
    if (!in || !out) return std::nullopt;
    for (const auto& [n, v] : *in) {
      if (std::find(spec.input_nets.begin(), spec.input_nets.end(), n) == spec.input_nets.end())
        spec.input_nets.push_back(n);
    }
    for (const auto& [n, v] : *out) {
      if (std::find(spec.output_nets.begin(), spec.output_nets.end(), n) == spec.output_nets.end())
        spec.output_nets.push_back(n);
    }
    spec.rows.push_back({*in, *out, std::nullopt});
  }
  if (spec.rows.empty()) return std::nullopt;
  try {
    spec.validate();
  } catch (const Error&) {
    return std::nullopt;
  }
  return spec;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json truth_table_to_json(const TruthTableSpec& spec) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : spec.rows) {
    nlohmann::json j{{"in", r.inputs}, {"out", r.outputs}};
    if (r.hold) j["hold"] = *r.hold;
    rows.push_back(std::move(j));
  }
  return {{"inputs", spec.input_nets}, {"outputs", spec.output_nets}, {"rows", rows}};
}

TruthTableSpec truth_table_from_json(const nlohmann::json& j) {
  TruthTableSpec spec;
  try {
    spec.input_nets = j.at("inputs").get<std::vector<std::string>>();
    spec.output_nets = j.at("outputs").get<std::vector<std::string>>();
    for (const auto& r : j.at("rows")) {
      TruthTableRow row;
      row.inputs = r.at("in").get<std::map<std::string, int>>();
      row.outputs = r.at("out").get<std::map<std::string, int>>();
      if (r.contains("hold")) row.hold = r["hold"].get<double>();
      spec.rows.push_back(std::move(row));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("malformed truth table spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

nlohmann::json temporal_to_json(const TemporalSpec& spec) {
  nlohmann::json expect = nlohmann::json::array();
  for (const auto& x : spec.expectations)
    expect.push_back({{"t", x.t}, {"net", x.net}, {"v", x.v}, {"w", x.w}});
  return {{"stimulus", stimulus_to_json(spec.stimulus)}, {"expect", expect}};
}

TemporalSpec temporal_from_json(const nlohmann::json& j) {
  TemporalSpec spec;
  try {
    if (j.contains("stimulus")) spec.stimulus = stimulus_from_json(j["stimulus"]);
    for (const auto& x : j.at("expect")) {
      spec.expectations.push_back({x.at("t").get<double>(), x.at("net").get<std::string>(),
                                   x.at("v").get<int>(), x.value("w", 0.0)});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("malformed temporal spec: ") + e.what());
  }
  return spec;
}

nlohmann::json finding_to_json(const Finding& f) {
  static const char* kinds[] = {"mismatch", "hint", "grammar", "grammar_warning",
                                "redundancy", "temporal", "lint"};
  nlohmann::json j{{"kind", kinds[static_cast<int>(f.kind)]}, {"message", f.message}};
  if (f.row) j["row"] = *f.row;
  if (f.op) j["operator"] = *f.op;
  if (f.net) j["net"] = *f.net;
  return j;
}

nlohmann::json findings_to_json(const std::vector<Finding>& findings) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& f : findings) arr.push_back(finding_to_json(f));
  return arr;
}

nlohmann::json report_to_json(const InspectionReport& report) {
  return {{"review", report.review()},
          {"score", report.score},
          {"pass", report.pass},
          {"truth_table", findings_to_json(report.truth_table_findings)},
          {"grammar", findings_to_json(report.grammar_findings)},
          {"redundancy", findings_to_json(report.redundancy_findings)},
          {"other", findings_to_json(report.other_findings)}};
}

}  // namespace fluidc
