#include <random>

#include "doctest.h"
#include "fluidc/error.hpp"
#include "fluidc/fchdl.hpp"
#include "support.hpp"

using namespace fluidc;
using nlohmann::json;

namespace {

ErrorCode parse_error_code(std::string_view text) {
  try {
    parse_circuit(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a parse error for: " << text);
  return ErrorCode::IoError;
}

bool has_diag(const Netlist& n, DiagnosticCode code) {
  for (const auto& d : n.diagnostics()) {
    if (d.code == code) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("full adder sum bit") {
  const Netlist n = parse_circuit("XOR(a, b; S1) XOR(S1, cin; sum)");
  CHECK(n.operators().size() == 2);
  CHECK(n.nets() == std::set<std::string>{"a", "b", "cin", "S1", "sum"});
  CHECK(n.primary_inputs() == std::set<std::string>{"a", "b", "cin"});
  CHECK(n.primary_outputs() == std::set<std::string>{"sum"});
  CHECK(n.diagnostics().empty());
}

TEST_CASE("DG90 corrected circuit") {
  const Netlist n = parse_circuit(
      "NOT(A; C) NOT(B; D) OR (C, D; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)");
  REQUIRE(n.operators().size() == 5);
  const auto& timer = n.operators()[3];
  CHECK(timer.kind == OperatorKind::Timer);
  CHECK(timer.params == std::vector<double>{1800});
  CHECK(n.operators()[4].outputs == std::vector<std::string>{"Output I"});
  CHECK(n.primary_inputs() == std::set<std::string>{"A", "B"});
  CHECK(n.primary_outputs() == std::set<std::string>{"Output I"});
}

TEST_CASE("operator names are case-insensitive, nets are not") {
  const Netlist a = parse_circuit("timer(A,10;B)");
  const Netlist b = parse_circuit("TIMER(A, 10; B)");
  CHECK(structurally_equal(a, b));
  const Netlist c = parse_circuit("NOT(a; Q) NOT(A; q)");
  CHECK(c.primary_inputs() == std::set<std::string>{"A", "a"});
}

TEST_CASE("aliases and default pulse") {
  CHECK(parse_circuit("Mux(D0, D1, D2, D3; S1, S2; Y)").operators()[0].kind ==
        OperatorKind::Multiplexer);
  CHECK(parse_circuit("Demux(I; S1, S2; D0, D1, D2, D3)").operators()[0].kind ==
        OperatorKind::Demultiplexer);
  const auto edge = parse_circuit("EdgeDetector(A; Q)").operators()[0];
  REQUIRE(edge.params.size() == 1);
  CHECK(edge.params[0] == doctest::Approx(kDefaultEdgePulse));
  const auto edge2 = parse_circuit("EdgeDetector(A; Q, 0.25)").operators()[0];
  CHECK(edge2.params[0] == doctest::Approx(0.25));
}

TEST_CASE("diode direction") {
  const auto f = parse_circuit("Diode(A, forward; B)").operators()[0];
  CHECK(f.direction == DiodeDirection::Forward);
  const auto b = parse_circuit("Diode(A, backward; B)").operators()[0];
  CHECK(b.direction == DiodeDirection::Backward);
  CHECK(parse_error_code("Diode(A, sideways; B)") == ErrorCode::BadParameter);
}

TEST_CASE("parse errors are typed") {
  CHECK(parse_error_code("NOT(A, B; C)") == ErrorCode::ArityError);
  CHECK(parse_error_code("AND(A; C)") == ErrorCode::ArityError);
  CHECK(parse_error_code("FOO(A; B)") == ErrorCode::UnknownOperator);
  CHECK(parse_error_code("") == ErrorCode::EmptyCircuit);
  CHECK(parse_error_code("   \n ") == ErrorCode::EmptyCircuit);
  CHECK(parse_error_code("NOT(A; B") == ErrorCode::SyntaxError);
  CHECK(parse_error_code("Timer(A, ten; B)") == ErrorCode::BadParameter);
  CHECK(parse_error_code("Timer(A, -1; B)") == ErrorCode::BadParameter);
}

TEST_CASE("syntax error carries an offset") {
  try {
    parse_circuit("NOT(A B; C)");
    FAIL("should not parse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SyntaxError);
    REQUIRE(e.offset().has_value());
    CHECK(*e.offset() <= 11);
  }
}

TEST_CASE("module-port names keep their interior space") {
  const Netlist n = parse_circuit("NOT(Input A; Output I)");
  CHECK(n.primary_inputs() == std::set<std::string>{"Input A"});
  CHECK(serialize_circuit(n).find("Output I") != std::string::npos);
}

TEST_CASE("serialize canonical form") {
  CHECK(serialize_circuit(parse_circuit("NOT(A;C)")) == "NOT(A; C)");
  CHECK(serialize_operator(parse_circuit("timer(A,10;B)").operators()[0]) == "Timer(A, 10; B)");
}

TEST_CASE("circuit corpus parses, validates and round-trips") {
  const auto lines = testsupport::corpus();
  REQUIRE(lines.size() >= 13);
  for (const auto& text : lines) {
    CAPTURE(text);
    const Netlist n = parse_circuit(text);
    CHECK_FALSE(has_errors(n.diagnostics()));
    const Netlist again = parse_circuit(serialize_circuit(n));
    CHECK(structurally_equal(n, again));
    CHECK(serialize_circuit(again) == serialize_circuit(n));
    const Netlist from_json = netlist_from_json(netlist_to_json(n));
    CHECK(structurally_equal(n, from_json));
    CHECK(from_json.primary_outputs() == n.primary_outputs());
  }
}

TEST_CASE("netlist JSON wire format") {
  const json j = netlist_to_json(parse_circuit("Timer(Q, 1800; TimerOutput)"));
  REQUIRE(j["operators"].size() == 1);
  const auto& op = j["operators"][0];
  CHECK(op["kind"] == "TIMER");
  CHECK(op["inputs"] == json::array({"Q"}));
  CHECK(op["params"] == json::array({1800}));
  CHECK(op["outputs"] == json::array({"TimerOutput"}));
  CHECK(j["inputs"] == json::array({"Q"}));
  CHECK(j["outputs"] == json::array({"TimerOutput"}));

  const json wire = json::parse(
      R"({"operators":[{"kind":"TIMER","inputs":["Q"],"params":[1800],"outputs":["TimerOutput"]}],"inputs":["Q"],"outputs":["TimerOutput"]})");
  CHECK(structurally_equal(netlist_from_json(wire), parse_circuit("Timer(Q, 1800; TimerOutput)")));
  CHECK(load_netlist(wire.dump()).operators().size() == 1);
  CHECK(load_netlist("NOT(A; B)").operators().size() == 1);
}

TEST_CASE("diagnostics") {
  CHECK(has_diag(parse_circuit("AND(A, B; Q) OR(C, D; Q)"), DiagnosticCode::MultipleDrivers));
  CHECK(parse_circuit("Diode(A, forward; Q) Diode(B, forward; Q)").diagnostics().empty());
  const Netlist latch = parse_circuit("NOR(A, Q2; Q1) NOR(B, Q1; Q2)");
  CHECK(has_diag(latch, DiagnosticCode::CombinationalCycle));
  CHECK_FALSE(has_errors(latch.diagnostics()));
  CHECK(has_diag(parse_circuit("AND(A, Q; Q)"), DiagnosticCode::SelfLoop));
  const Netlist dangling = parse_circuit("NOT(A; C) NOT(A; Z) AND(C, B; Output I)");
  CHECK(has_diag(dangling, DiagnosticCode::DanglingNet));
}

TEST_CASE("parse determinism") {
  const std::string text = "NOT(A; C) NOT(B; D) OR (C, D; Q) Timer(Q, 1800; T) AND(Q, T; Output I)";
  CHECK(netlist_to_json(parse_circuit(text)) == netlist_to_json(parse_circuit(text)));
}

TEST_CASE("random gate netlists round-trip") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const auto c = testsupport::random_circuit(rng, 6, 12);
    CAPTURE(c.text);
    const Netlist n = parse_circuit(c.text);
    CHECK(structurally_equal(n, parse_circuit(serialize_circuit(n))));
  }
}

TEST_CASE("error totality on mutated input") {
  // Every byte string either parses or raises exactly one typed error.
  std::mt19937_64 rng(11);
  const auto lines = testsupport::corpus();
  const std::string alphabet = "(),; \nABQxyz0123456789.-NOTANDtimer";
  int parsed = 0, rejected = 0;
  for (int i = 0; i < 3000; ++i) {
    std::string s = lines[rng() % lines.size()];
    const int edits = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < edits && !s.empty(); ++k) {
      const std::size_t pos = rng() % s.size();
      switch (rng() % 3) {
        case 0: s.erase(pos, 1); break;
        case 1: s.insert(pos, 1, alphabet[rng() % alphabet.size()]); break;
        default: s[pos] = alphabet[rng() % alphabet.size()]; break;
      }
    }
    try {
      parse_circuit(s);
      ++parsed;
    } catch (const Error& e) {
      ++rejected;
      if (e.code() == ErrorCode::SyntaxError) CHECK(e.offset().has_value());
    }
  }
  CHECK(parsed + rejected == 3000);
}
