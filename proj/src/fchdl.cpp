#include "fluidc/fchdl.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <queue>

#include "fluidc/error.hpp"

namespace fluidc {

namespace {

struct KindInfo {
  OperatorKind kind;
  std::string_view wire;
  std::string_view hdl;
  Arity arity;
};

// clang-format off
constexpr KindInfo kKinds[] = {
    {OperatorKind::Not,           "NOT",           "NOT",           {1, 0, 1}},
    {OperatorKind::Or,            "OR",            "OR",            {2, 0, 1}},
    {OperatorKind::And,           "AND",           "AND",           {2, 0, 1}},
    {OperatorKind::Nor,           "NOR",           "NOR",           {2, 0, 1}},
    {OperatorKind::Nand,          "NAND",          "NAND",          {2, 0, 1}},
    {OperatorKind::Xor,           "XOR",           "XOR",           {2, 0, 1}},
    {OperatorKind::Filter,        "FILTER",        "Filter",        {1, 1, 1}},
    {OperatorKind::Timer,         "TIMER",         "Timer",         {1, 1, 1}},
    {OperatorKind::Register,      "REGISTER",      "Register",      {2, 0, 2}},
    {OperatorKind::EdgeDetector,  "EDGE_DETECTOR", "EdgeDetector",  {1, 1, 1}},
    {OperatorKind::Multiplexer,   "MULTIPLEXER",   "Multiplexer",   {6, 0, 1}},
    {OperatorKind::Demultiplexer, "DEMULTIPLEXER", "Demultiplexer", {3, 0, 4}},
    {OperatorKind::Diode,         "DIODE",         "Diode",         {1, 0, 1}},
};
// clang-format on

const KindInfo& info(OperatorKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k;
  }
  return kKinds[0];
}

std::string upper_alnum(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '_') continue;
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i])))
      return false;
  }
  return true;
}

// One comma-separated item inside an operator's parentheses.
struct Item {
  std::string text;  // trimmed
  std::size_t offset;
};
using Group = std::vector<Item>;

[[noreturn]] void fail(ErrorCode code, const std::string& msg, std::size_t offset) {
  throw Error(code, msg + " (at byte " + std::to_string(offset) + ")", offset);
}

Item make_item(std::string_view text, std::size_t begin, std::size_t end) {
  std::size_t b = begin;
  std::size_t e = end;
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  if (b == e) fail(ErrorCode::SyntaxError, "empty argument", begin);
  Item item{std::string(text.substr(b, e - b)), b};
  // Interior whitespace is only legal for module-port names ("Output I").
  auto ws = item.text.find_first_of(" \t\r\n");
  if (ws != std::string::npos) {
    std::string_view first(item.text.data(), ws);
    if (!iequals(first, "Output") && !iequals(first, "Input")) {
      std::size_t next = ws;
      while (next < item.text.size() && is_space(item.text[next])) ++next;
      fail(ErrorCode::SyntaxError,
           "missing ',' between '" + std::string(first) + "' and '" +
               item.text.substr(next) + "'",
           b + next);
    }
  }
  return item;
}

double parse_param(const Item& item, std::string_view what) {
  std::string_view s = item.text;
  // Unit suffixes are tolerated and ignored.
  for (std::string_view unit : {"Hz", "hz", "sec", "s"}) {
    if (s.size() > unit.size() && s.substr(s.size() - unit.size()) == unit) {
      s.remove_suffix(unit.size());
      while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
      break;
    }
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    fail(ErrorCode::BadParameter,
         std::string(what) + " must be a number, got '" + item.text + "'", item.offset);
  }
  if (!std::isfinite(value) || value <= 0.0) {
    fail(ErrorCode::BadParameter,
         std::string(what) + " must be positive, got '" + item.text + "'", item.offset);
  }
  return value;
}

std::vector<std::string> names(const Group& g, std::size_t from = 0, std::size_t count = SIZE_MAX) {
  std::vector<std::string> out;
  for (std::size_t i = from; i < g.size() && out.size() < count; ++i) out.push_back(g[i].text);
  return out;
}

std::string signature(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Not: return "NOT(input; output)";
    case OperatorKind::Filter: return "Filter(input, frequency; output)";
    case OperatorKind::Timer: return "Timer(input, time; output)";
    case OperatorKind::Register: return "Register(D, E; Q, iQ)";
    case OperatorKind::EdgeDetector: return "EdgeDetector(input; output[, time])";
    case OperatorKind::Multiplexer: return "Multiplexer(D0, D1, D2, D3; S1, S2; Output)";
    case OperatorKind::Demultiplexer: return "Demultiplexer(Input; S1, S2; D0, D1, D2, D3)";
    case OperatorKind::Diode: return "Diode(input, forward|backward; output)";
    default: return std::string(hdl_name(kind)) + "(a, b; output)";
  }
}

[[noreturn]] void arity_error(OperatorKind kind, std::size_t offset) {
  fail(ErrorCode::ArityError,
       std::string(hdl_name(kind)) + " expects " + signature(kind), offset);
}

OperatorInstance shape_operator(OperatorKind kind, const std::vector<Group>& groups,
                                std::size_t name_offset, std::size_t close_offset) {
  if (groups.size() < 2) {
    fail(ErrorCode::SyntaxError, "missing ';' separator between inputs and outputs",
         close_offset);
  }
  OperatorInstance op;
  op.kind = kind;
  const Arity a = arity(kind);

  switch (kind) {
    case OperatorKind::Not:
    case OperatorKind::Or:
    case OperatorKind::And:
    case OperatorKind::Nor:
    case OperatorKind::Nand:
    case OperatorKind::Xor:
    case OperatorKind::Register:
      if (groups.size() != 2 || groups[0].size() != static_cast<std::size_t>(a.inputs) ||
          groups[1].size() != static_cast<std::size_t>(a.outputs))
        arity_error(kind, name_offset);
      op.inputs = names(groups[0]);
      op.outputs = names(groups[1]);
      break;

    case OperatorKind::Filter:
    case OperatorKind::Timer:
      if (groups.size() != 2 || groups[0].size() != 2 || groups[1].size() != 1)
        arity_error(kind, name_offset);
      op.inputs = names(groups[0], 0, 1);
      op.params.push_back(parse_param(
          groups[0][1], kind == OperatorKind::Filter ? "frequency" : "time"));
      op.outputs = names(groups[1]);
      break;

    case OperatorKind::EdgeDetector: {
      if (groups.size() != 2) arity_error(kind, name_offset);
      const Group& in = groups[0];
      const Group& out = groups[1];
      if (in.size() == 1 && out.size() == 1) {
        op.params.push_back(kDefaultEdgePulse);
      } else if (in.size() == 1 && out.size() == 2) {
        op.params.push_back(parse_param(out[1], "pulse time"));
      } else if (in.size() == 2 && out.size() == 1) {
        op.params.push_back(parse_param(in[1], "pulse time"));
      } else {
        arity_error(kind, name_offset);
      }
      op.inputs = names(in, 0, 1);
      op.outputs = names(out, 0, 1);
      break;
    }

    case OperatorKind::Multiplexer:
      if (groups.size() == 3 && groups[0].size() == 4 && groups[1].size() == 2 &&
          groups[2].size() == 1) {
        op.inputs = names(groups[0]);
        for (auto& s : names(groups[1])) op.inputs.push_back(s);
        op.outputs = names(groups[2]);
      } else if (groups.size() == 2 && groups[0].size() == 6 && groups[1].size() == 1) {
        op.inputs = names(groups[0]);
        op.outputs = names(groups[1]);
      } else {
        arity_error(kind, name_offset);
      }
      break;

    case OperatorKind::Demultiplexer:
      if (groups.size() == 3 && groups[0].size() == 1 && groups[1].size() == 2 &&
          groups[2].size() == 4) {
        op.inputs = names(groups[0]);
        for (auto& s : names(groups[1])) op.inputs.push_back(s);
        op.outputs = names(groups[2]);
      } else if (groups.size() == 2 && groups[0].size() == 3 && groups[1].size() == 4) {
        op.inputs = names(groups[0]);
        op.outputs = names(groups[1]);
      } else {
        arity_error(kind, name_offset);
      }
      break;

    case OperatorKind::Diode: {
      if (groups.size() != 2 || groups[0].size() != 2 || groups[1].size() != 1)
        arity_error(kind, name_offset);
      const Item& dir = groups[0][1];
      if (iequals(dir.text, "forward")) {
        op.direction = DiodeDirection::Forward;
      } else if (iequals(dir.text, "backward")) {
        op.direction = DiodeDirection::Backward;
      } else {
        fail(ErrorCode::BadParameter,
             "diode direction must be forward or backward, got '" + dir.text + "'",
             dir.offset);
      }
      op.inputs = names(groups[0], 0, 1);
      op.outputs = names(groups[1]);
      break;
    }
  }
  return op;
}

const std::vector<std::size_t> kNoOperators;

}  // namespace

Arity arity(OperatorKind kind) { return info(kind).arity; }
std::string_view kind_name(OperatorKind kind) { return info(kind).wire; }
std::string_view hdl_name(OperatorKind kind) { return info(kind).hdl; }

std::optional<OperatorKind> kind_from_name(std::string_view name) {
  const std::string key = upper_alnum(name);
  if (key == "MUX") return OperatorKind::Multiplexer;
  if (key == "DEMUX") return OperatorKind::Demultiplexer;
  for (const auto& k : kKinds) {
    if (upper_alnum(k.wire) == key) return k.kind;
  }
  return std::nullopt;
}

bool is_gate(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::Not:
    case OperatorKind::Or:
    case OperatorKind::And:
    case OperatorKind::Nor:
    case OperatorKind::Nand:
    case OperatorKind::Xor:
      return true;
    default:
      return false;
  }
}

bool is_combinational(OperatorKind kind) {
  return is_gate(kind) || kind == OperatorKind::Diode || kind == OperatorKind::Multiplexer ||
         kind == OperatorKind::Demultiplexer;
}

bool is_timed(OperatorKind kind) {
  return kind == OperatorKind::Filter || kind == OperatorKind::Timer ||
         kind == OperatorKind::EdgeDetector;
}

std::string_view to_string(DiagnosticCode code) {
  switch (code) {
    case DiagnosticCode::MultipleDrivers: return "MultipleDrivers";
    case DiagnosticCode::DanglingNet: return "DanglingNet";
    case DiagnosticCode::UnreachableOperator: return "UnreachableOperator";
    case DiagnosticCode::CombinationalCycle: return "CombinationalCycle";
    case DiagnosticCode::SelfLoop: return "SelfLoop";
  }
  return "Unknown";
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::Error; });
}

// ---------------------------------------------------------------------------
// Netlist

Netlist Netlist::build(std::vector<OperatorInstance> operators,
                       std::optional<std::vector<std::string>> outputs) {
  Netlist n;
  n.operators_ = std::move(operators);
  for (std::size_t i = 0; i < n.operators_.size(); ++i) {
    auto& op = n.operators_[i];
    op.id = i;
    const Arity a = arity(op.kind);
    if (op.inputs.size() != static_cast<std::size_t>(a.inputs) ||
        op.outputs.size() != static_cast<std::size_t>(a.outputs)) {
      throw Error(ErrorCode::ArityError,
                  "operator " + std::to_string(i) + " (" + std::string(hdl_name(op.kind)) +
                      ") has wrong number of nets");
    }
    if (op.kind == OperatorKind::EdgeDetector && op.params.empty())
      op.params.push_back(kDefaultEdgePulse);
    if (op.params.size() != static_cast<std::size_t>(a.params)) {
      throw Error(ErrorCode::ArityError, "operator " + std::to_string(i) + " (" +
                                             std::string(hdl_name(op.kind)) +
                                             ") has wrong number of parameters");
    }
    for (double p : op.params) {
      if (!std::isfinite(p) || p <= 0.0)
        throw Error(ErrorCode::BadParameter,
                    "operator " + std::to_string(i) + " parameter must be positive");
    }
    if (op.kind == OperatorKind::Diode && !op.direction)
      op.direction = DiodeDirection::Forward;
    if (op.kind != OperatorKind::Diode) op.direction.reset();
    for (const auto& net : op.inputs) {
      n.nets_.insert(net);
      n.consumers_[net].push_back(i);
    }
    for (const auto& net : op.outputs) {
      n.nets_.insert(net);
      n.drivers_[net].push_back(i);
    }
  }
  for (const auto& net : n.nets_) {
    if (!n.drivers_.count(net)) n.inputs_.insert(net);
  }
  if (outputs && !outputs->empty()) {
    for (const auto& net : *outputs) {
      if (!n.nets_.count(net))
        throw Error(ErrorCode::InvalidNetlist, "declared output '" + net + "' is not a net");
      n.outputs_.insert(net);
    }
    n.outputs_explicit_ = true;
  } else {
    for (const auto& net : n.nets_) {
      if (n.drivers_.count(net) && net.rfind("Output", 0) == 0) n.outputs_.insert(net);
    }
    if (n.outputs_.empty()) {
      for (const auto& net : n.nets_) {
        if (n.drivers_.count(net) && !n.consumers_.count(net)) n.outputs_.insert(net);
      }
    }
  }
  n.diagnostics_ = validate_netlist(n);
  return n;
}

const std::vector<std::size_t>& Netlist::drivers(const std::string& net) const {
  auto it = drivers_.find(net);
  return it == drivers_.end() ? kNoOperators : it->second;
}

const std::vector<std::size_t>& Netlist::consumers(const std::string& net) const {
  auto it = consumers_.find(net);
  return it == consumers_.end() ? kNoOperators : it->second;
}

bool Netlist::has_timed_operators() const {
  return std::any_of(operators_.begin(), operators_.end(),
                     [](const OperatorInstance& op) { return is_timed(op.kind); });
}

bool structurally_equal(const Netlist& a, const Netlist& b) {
  if (a.operators().size() != b.operators().size()) return false;
  for (std::size_t i = 0; i < a.operators().size(); ++i) {
    const auto& x = a.operators()[i];
    const auto& y = b.operators()[i];
    if (x.kind != y.kind || x.params != y.params || x.direction != y.direction ||
        x.inputs != y.inputs || x.outputs != y.outputs)
      return false;
  }
  return a.nets() == b.nets() && a.primary_inputs() == b.primary_inputs() &&
         a.primary_outputs() == b.primary_outputs();
}

// ---------------------------------------------------------------------------
// Parsing

Netlist parse_circuit(std::string_view text) {
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto skip_trivia = [&](bool separators) {
    while (i < n) {
      char c = text[i];
      if (is_space(c) || (separators && (c == ';' || c == ','))) {
        ++i;
      } else if (c == '/' && i + 1 < n && text[i + 1] == '/') {
        while (i < n && text[i] != '\n') ++i;
      } else if (c == '/' && i + 1 < n && text[i + 1] == '*') {
        std::size_t end = text.find("*/", i + 2);
        if (end == std::string_view::npos) fail(ErrorCode::SyntaxError, "unterminated comment", i);
        i = end + 2;
      } else {
        break;
      }
    }
  };

  skip_trivia(true);
  if (i == n) throw Error(ErrorCode::EmptyCircuit, "circuit text is empty");

  std::vector<OperatorInstance> operators;
  while (true) {
    skip_trivia(true);
    if (i == n) break;
    const std::size_t name_begin = i;
    while (i < n && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
    if (i == name_begin) {
      fail(ErrorCode::SyntaxError,
           std::string("expected operator name, found '") + text[i] + "'", i);
    }
    const std::string_view name = text.substr(name_begin, i - name_begin);
    while (i < n && is_space(text[i])) ++i;
    if (i == n || text[i] != '(') {
      fail(ErrorCode::SyntaxError, "expected '(' after '" + std::string(name) + "'", i);
    }
    const std::size_t open = i++;

    std::vector<Group> groups(1);
    std::size_t item_begin = i;
    bool closed = false;
    while (i < n) {
      char c = text[i];
      if (c == ')') {
        groups.back().push_back(make_item(text, item_begin, i));
        closed = true;
        break;
      }
      if (c == '(') fail(ErrorCode::SyntaxError, "unexpected '(' inside operator", i);
      if (c == ',' || c == ';') {
        groups.back().push_back(make_item(text, item_begin, i));
        if (c == ';') groups.emplace_back();
        item_begin = i + 1;
      }
      ++i;
    }
    if (!closed) fail(ErrorCode::SyntaxError, "unbalanced parentheses", open);
    const std::size_t close = i++;

    auto kind = kind_from_name(name);
    if (!kind) {
      fail(ErrorCode::UnknownOperator, "unknown operator '" + std::string(name) + "'",
           name_begin);
    }
    operators.push_back(shape_operator(*kind, groups, name_begin, close));
  }
  return Netlist::build(std::move(operators));
}

// ---------------------------------------------------------------------------
// Serialization

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string serialize_operator(const OperatorInstance& op) {
  auto join = [](const std::vector<std::string>& v, std::size_t from, std::size_t to) {
    std::string s;
    for (std::size_t k = from; k < to; ++k) {
      if (k > from) s += ", ";
      s += v[k];
    }
    return s;
  };
  std::string s(hdl_name(op.kind));
  s += '(';
  switch (op.kind) {
    case OperatorKind::Filter:
    case OperatorKind::Timer:
      s += op.inputs[0] + ", " + format_number(op.params[0]) + "; " + op.outputs[0];
      break;
    case OperatorKind::EdgeDetector:
      s += op.inputs[0] + "; " + op.outputs[0] + ", " + format_number(op.params[0]);
      break;
    case OperatorKind::Multiplexer:
      s += join(op.inputs, 0, 4) + "; " + join(op.inputs, 4, 6) + "; " + op.outputs[0];
      break;
    case OperatorKind::Demultiplexer:
      s += op.inputs[0] + "; " + join(op.inputs, 1, 3) + "; " + join(op.outputs, 0, 4);
      break;
    case OperatorKind::Diode:
      s += op.inputs[0] + ", " +
           (op.direction == DiodeDirection::Backward ? "backward" : "forward") + "; " +
           op.outputs[0];
      break;
    default:
      s += join(op.inputs, 0, op.inputs.size()) + "; " + join(op.outputs, 0, op.outputs.size());
      break;
  }
  s += ')';
  return s;
}

std::string serialize_circuit(const Netlist& netlist) {
  std::string out;
  for (const auto& op : netlist.operators()) {
    if (!out.empty()) out += ' ';
    out += serialize_operator(op);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Diagnostic> validate_netlist(const Netlist& netlist) {
  std::vector<Diagnostic> out;
  const auto& ops = netlist.operators();

  for (const auto& net : netlist.nets()) {
    const auto& drv = netlist.drivers(net);
    if (drv.size() > 1) {
      bool wired_or = std::all_of(drv.begin(), drv.end(), [&](std::size_t id) {
        return ops[id].kind == OperatorKind::Diode &&
               ops[id].direction == DiodeDirection::Forward;
      });
      if (!wired_or) {
        out.push_back({DiagnosticCode::MultipleDrivers, Severity::Error,
                       "net '" + net + "' has " + std::to_string(drv.size()) +
                           " drivers; joined outputs need forward diodes",
                       {net}, drv});
      }
    }
    if (!drv.empty() && netlist.consumers(net).empty() && !netlist.primary_outputs().count(net)) {
      out.push_back({DiagnosticCode::DanglingNet, Severity::Warning,
                     "net '" + net + "' is driven but never used", {net}, drv});
    }
  }

  for (const auto& op : ops) {
    for (const auto& o : op.outputs) {
      if (std::find(op.inputs.begin(), op.inputs.end(), o) != op.inputs.end()) {
        out.push_back({DiagnosticCode::SelfLoop, Severity::Warning,
                       "operator " + std::to_string(op.id) + " (" +
                           std::string(hdl_name(op.kind)) + ") feeds its own input '" + o + "'",
                       {o}, {op.id}});
        break;
      }
    }
  }

  // Tarjan SCC over combinational operators.
  {
    const std::size_t count = ops.size();
    std::vector<std::vector<std::size_t>> succ(count);
    for (const auto& op : ops) {
      if (!is_combinational(op.kind)) continue;
      for (const auto& o : op.outputs) {
        for (std::size_t c : netlist.consumers(o)) {
          if (c != op.id && is_combinational(ops[c].kind)) succ[op.id].push_back(c);
        }
      }
    }
    std::vector<int> index(count, -1), low(count, 0);
    std::vector<bool> on_stack(count, false);
    std::vector<std::size_t> stack;
    int counter = 0;
    std::function<void(std::size_t)> strong = [&](std::size_t v) {
      index[v] = low[v] = counter++;
      stack.push_back(v);
      on_stack[v] = true;
      for (std::size_t w : succ[v]) {
        if (index[w] < 0) {
          strong(w);
          low[v] = std::min(low[v], low[w]);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      }
      if (low[v] == index[v]) {
        std::vector<std::size_t> comp;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != v);
        if (comp.size() > 1) {
          std::sort(comp.begin(), comp.end());
          std::set<std::string> nets;
          for (std::size_t id : comp) {
            for (const auto& o : ops[id].outputs) nets.insert(o);
          }
          std::string ids;
          for (std::size_t id : comp) ids += (ids.empty() ? "" : ", ") + std::to_string(id);
          out.push_back({DiagnosticCode::CombinationalCycle, Severity::Warning,
                         "combinational cycle through operators " + ids,
                         {nets.begin(), nets.end()}, comp});
        }
      }
    };
    for (std::size_t v = 0; v < count; ++v) {
      if (index[v] < 0 && is_combinational(ops[v].kind)) strong(v);
    }
  }

  // Backward reachability from primary outputs.
  {
    std::vector<bool> reached(ops.size(), false);
    std::queue<std::string> frontier;
    std::set<std::string> seen;
    for (const auto& o : netlist.primary_outputs()) {
      frontier.push(o);
      seen.insert(o);
    }
    while (!frontier.empty()) {
      std::string net = frontier.front();
      frontier.pop();
      for (std::size_t id : netlist.drivers(net)) {
        if (reached[id]) continue;
        reached[id] = true;
        for (const auto& in : ops[id].inputs) {
          if (seen.insert(in).second) frontier.push(in);
        }
      }
    }
    for (const auto& op : ops) {
      if (!reached[op.id]) {
        out.push_back({DiagnosticCode::UnreachableOperator, Severity::Warning,
                       "operator " + std::to_string(op.id) + " (" +
                           std::string(hdl_name(op.kind)) + ") does not reach any output",
                       op.outputs, {op.id}});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json netlist_to_json(const Netlist& netlist) {
  nlohmann::json ops = nlohmann::json::array();
  for (const auto& op : netlist.operators()) {
    nlohmann::json j{{"kind", kind_name(op.kind)},
                     {"inputs", op.inputs},
                     {"params", op.params},
                     {"outputs", op.outputs}};
    if (op.direction) j["direction"] = *op.direction == DiodeDirection::Forward ? "forward" : "backward";
    ops.push_back(std::move(j));
  }
  return {{"operators", ops},
          {"inputs", std::vector<std::string>(netlist.primary_inputs().begin(),
                                              netlist.primary_inputs().end())},
          {"outputs", std::vector<std::string>(netlist.primary_outputs().begin(),
                                               netlist.primary_outputs().end())}};
}

Netlist netlist_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("operators") || !j["operators"].is_array())
    throw Error(ErrorCode::BadRequest, "netlist JSON needs an \"operators\" array");
  std::vector<OperatorInstance> ops;
  try {
    for (const auto& o : j["operators"]) {
      OperatorInstance op;
      auto kind = kind_from_name(o.at("kind").get<std::string>());
      if (!kind)
        throw Error(ErrorCode::UnknownOperator,
                    "unknown operator '" + o.at("kind").get<std::string>() + "'");
      op.kind = *kind;
      op.inputs = o.at("inputs").get<std::vector<std::string>>();
      op.outputs = o.at("outputs").get<std::vector<std::string>>();
      if (o.contains("params")) op.params = o["params"].get<std::vector<double>>();
      if (o.contains("direction")) {
        const auto d = o["direction"].get<std::string>();
        if (iequals(d, "forward")) op.direction = DiodeDirection::Forward;
        else if (iequals(d, "backward")) op.direction = DiodeDirection::Backward;
        else throw Error(ErrorCode::BadParameter, "bad diode direction '" + d + "'");
      }
      ops.push_back(std::move(op));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("malformed netlist JSON: ") + e.what());
  }
  std::optional<std::vector<std::string>> outputs;
  if (j.contains("outputs") && j["outputs"].is_array())
    outputs = j["outputs"].get<std::vector<std::string>>();
  return Netlist::build(std::move(ops), outputs);
}

nlohmann::json diagnostic_to_json(const Diagnostic& d) {
  return {{"code", to_string(d.code)},
          {"severity", d.severity == Severity::Error ? "error" : "warning"},
          {"message", d.message},
          {"nets", d.nets},
          {"operators", d.operators}};
}

nlohmann::json diagnostics_to_json(const std::vector<Diagnostic>& diagnostics) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& d : diagnostics) arr.push_back(diagnostic_to_json(d));
  return arr;
}

Netlist load_netlist(std::string_view text) {
  std::size_t k = 0;
  while (k < text.size() && is_space(text[k])) ++k;
  if (k < text.size() && text[k] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::BadRequest, std::string("invalid JSON: ") + e.what());
    }
    if (j.contains("circuit") && j["circuit"].is_string())
      return parse_circuit(j["circuit"].get<std::string>());
    if (j.contains("netlist")) return netlist_from_json(j["netlist"]);
    return netlist_from_json(j);
  }
  return parse_circuit(text);
}

}  // namespace fluidc
