#pragma once

// FC-HDL: the operator description language for fluidic logic circuits.
//
//   NOT(A; C) NOT(B; D) OR (C, D; Q) Timer(Q, 1800; TimerOutput)
//   AND(Q, TimerOutput; Output I)
//
// Each operator is `Kind(groups)` where groups are separated by ';' and the
// items inside a group by ','. Operator names are case-insensitive; net names
// are case-sensitive and may contain interior spaces when they follow the
// module-port convention ("Output I", "Input A").

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fluidc {

enum class OperatorKind {
  Not,
  Or,
  And,
  Nor,
  Nand,
  Xor,
  Filter,
  Timer,
  Register,
  EdgeDetector,
  Multiplexer,
  Demultiplexer,
  Diode,
};

inline constexpr OperatorKind kAllOperatorKinds[] = {
    OperatorKind::Not,          OperatorKind::Or,
    OperatorKind::And,          OperatorKind::Nor,
    OperatorKind::Nand,         OperatorKind::Xor,
    OperatorKind::Filter,       OperatorKind::Timer,
    OperatorKind::Register,     OperatorKind::EdgeDetector,
    OperatorKind::Multiplexer,  OperatorKind::Demultiplexer,
    OperatorKind::Diode,
};

/// Net/parameter counts for an operator kind. Diode's direction enum is not
/// counted in `params`.
struct Arity {
  int inputs;
  int params;
  int outputs;
};

Arity arity(OperatorKind kind);

/// Upper-case wire name used in netlist JSON ("EDGE_DETECTOR").
std::string_view kind_name(OperatorKind kind);
/// Spelling used when emitting FC-HDL text ("EdgeDetector").
std::string_view hdl_name(OperatorKind kind);
/// Case-insensitive lookup accepting both spellings plus MUX/DEMUX.
std::optional<OperatorKind> kind_from_name(std::string_view name);

/// Two-input boolean gates and NOT.
bool is_gate(OperatorKind kind);
/// Operators whose output depends only on present inputs.
bool is_combinational(OperatorKind kind);
/// Operators with a time or frequency parameter.
bool is_timed(OperatorKind kind);

enum class DiodeDirection { Forward, Backward };

inline constexpr double kDefaultEdgePulse = 0.5;

struct OperatorInstance {
  std::size_t id = 0;
  OperatorKind kind = OperatorKind::Not;
  std::vector<double> params;
  std::optional<DiodeDirection> direction;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;

  bool operator==(const OperatorInstance&) const = default;
};

enum class Severity { Warning, Error };

enum class DiagnosticCode {
  MultipleDrivers,
  DanglingNet,
  UnreachableOperator,
  CombinationalCycle,
  SelfLoop,
};

std::string_view to_string(DiagnosticCode code);

struct Diagnostic {
  DiagnosticCode code;
  Severity severity;
  std::string message;
  std::vector<std::string> nets;
  std::vector<std::size_t> operators;
};

bool has_errors(const std::vector<Diagnostic>& diagnostics);

/// Immutable parsed circuit. Primary inputs are nets with no driver. Primary
/// outputs are either given explicitly (JSON form) or inferred: nets whose
/// name begins with "Output" when any exist, otherwise every driven net that
/// nothing consumes.
class Netlist {
 public:
  Netlist() = default;

  static Netlist build(std::vector<OperatorInstance> operators,
                       std::optional<std::vector<std::string>> outputs = {});

  const std::vector<OperatorInstance>& operators() const { return operators_; }
  const std::set<std::string>& nets() const { return nets_; }
  const std::set<std::string>& primary_inputs() const { return inputs_; }
  const std::set<std::string>& primary_outputs() const { return outputs_; }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }
  bool outputs_explicit() const { return outputs_explicit_; }

  /// Operator ids driving / consuming each net (a net appears once per port).
  const std::vector<std::size_t>& drivers(const std::string& net) const;
  const std::vector<std::size_t>& consumers(const std::string& net) const;

  bool empty() const { return operators_.empty(); }
  bool has_timed_operators() const;

 private:
  std::vector<OperatorInstance> operators_;
  std::set<std::string> nets_;
  std::set<std::string> inputs_;
  std::set<std::string> outputs_;
  std::map<std::string, std::vector<std::size_t>> drivers_;
  std::map<std::string, std::vector<std::size_t>> consumers_;
  std::vector<Diagnostic> diagnostics_;
  bool outputs_explicit_ = false;
};

/// Operators, kinds, params and net names compared in order; ids ignored.
bool structurally_equal(const Netlist& a, const Netlist& b);

Netlist parse_circuit(std::string_view text);
std::string serialize_circuit(const Netlist& netlist);
std::string serialize_operator(const OperatorInstance& op);
std::vector<Diagnostic> validate_netlist(const Netlist& netlist);

/// Shortest round-trip decimal text for a parameter value.
std::string format_number(double value);

nlohmann::json netlist_to_json(const Netlist& netlist);
Netlist netlist_from_json(const nlohmann::json& j);
nlohmann::json diagnostic_to_json(const Diagnostic& d);
nlohmann::json diagnostics_to_json(const std::vector<Diagnostic>& diagnostics);

/// Accepts either FC-HDL source or a netlist JSON document.
Netlist load_netlist(std::string_view text);

}  // namespace fluidc
