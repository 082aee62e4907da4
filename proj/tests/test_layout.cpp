#include <boost/property_tree/xml_parser.hpp>
#include <random>
#include <regex>
#include <sstream>

#include "doctest.h"
#include "fluidc/error.hpp"
#include "fluidc/layout.hpp"
#include "layout_oracle.hpp"
#include "support.hpp"

using namespace fluidc;
using nlohmann::json;
using testsupport::exhaustive_optimum;
using testsupport::recompute;

namespace {

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

bool well_formed(const std::string& xml) {
  std::istringstream in(xml);
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_xml(in, tree);
  } catch (const std::exception&) {
    return false;
  }
  return tree.size() == 1 && tree.begin()->first == "svg";
}

}  // namespace

TEST_CASE("template table") {
  for (auto kind : kAllOperatorKinds) {
    const auto& t = operator_template(kind);
    const Arity a = arity(kind);
    int ins = 0, outs = 0;
    for (const auto& port : t.ports) {
      (port.is_input ? ins : outs)++;
      const bool on_edge = port.dx == 0 || port.dy == 0 || port.dx == t.width - 1 || port.dy == t.height - 1;
      CHECK(on_edge);
    }
    CHECK(ins == a.inputs);
    CHECK(outs == a.outputs);
  }
  CHECK(operator_template(OperatorKind::And).width * operator_template(OperatorKind::And).height == 4);
  CHECK(operator_template(OperatorKind::Timer).width * operator_template(OperatorKind::Timer).height == 6);
  CHECK(operator_template(OperatorKind::Multiplexer).width * operator_template(OperatorKind::Multiplexer).height == 12);
  CHECK(operator_template(OperatorKind::Diode).width * operator_template(OperatorKind::Diode).height == 2);
}

TEST_CASE("rotated ports stay on the matching edge") {
  for (auto kind : kAllOperatorKinds) {
    const auto& t = operator_template(kind);
    for (int rot = 0; rot < 360; rot += 90) {
      const PlacedOperator p{5, 7, rot};
      const auto r = footprint_rect(kind, p);
      for (const auto& port : t.ports) {
        const auto cell = port_cell(kind, p, port.is_input, port.index);
        CHECK(cell.x >= r.x0);
        CHECK(cell.x < r.x1);
        CHECK(cell.y >= r.y0);
        CHECK(cell.y < r.y1);
        switch (port_edge(kind, p, port.is_input, port.index)) {
          case Edge::North: CHECK(cell.y == r.y0); break;
          case Edge::South: CHECK(cell.y == r.y1 - 1); break;
          case Edge::West: CHECK(cell.x == r.x0); break;
          case Edge::East: CHECK(cell.x == r.x1 - 1); break;
        }
      }
    }
  }
}

TEST_CASE("cost components") {
  const Netlist two = parse_circuit("NOT(A; B) NOT(C; D)");
  const auto stacked = layout_cost({{0, 0, 0}, {0, 0, 0}}, two);
  CHECK(stacked.overlap_cells == 4);
  CHECK(stacked.area == 4);
  const auto apart = layout_cost({{0, 0, 0}, {2, 0, 0}}, two);
  CHECK(apart.overlap_cells == 0);
  CHECK(apart.area == 8);
  CHECK(apart.total == doctest::Approx(16));

  const Netlist chain = parse_circuit("NOT(A; C) AND(C, B; Q)");
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    Placement p = {{int(rng() % 10), int(rng() % 10), int(rng() % 4) * 90},
                   {int(rng() % 10), int(rng() % 10), int(rng() % 4) * 90}};
    CHECK(layout_cost(p, chain) == recompute(p, chain, {}));
  }
}

TEST_CASE("single gate") {
  const LayoutResult r = place(parse_circuit("NOT(A; Q)"));
  CHECK(r.cost.overlap_cells == 0);
  CHECK(r.cost.wire == 0);
  CHECK(r.cost.total == doctest::Approx(2.0 * 4));
  CHECK(r.feasible);
}

TEST_CASE("empty netlist is refused") {
  CHECK_THROWS_AS(place(Netlist{}), Error);
}

TEST_CASE("seeded determinism") {
  const Netlist n = parse_circuit(
      "NOT(A; C) NOT(B; D) OR (C, D; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)");
  SAConfig c;
  c.seed = 1234;
  const LayoutResult a = place(n, c), b = place(n, c);
  CHECK(a == b);
  CHECK(layout_to_json(a) == layout_to_json(b));
  CHECK(export_layout_svg(a, n) == export_layout_svg(b, n));
  c.seed = 1235;
  CHECK(place(n, c).seed == 1235);
}

TEST_CASE("best cost never exceeds the initial cost and is certified") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 25; ++i) {
    const auto circuit = testsupport::random_circuit(rng, 4, 6);
    const Netlist n = parse_circuit(circuit.text);
    SAConfig c;
    c.seed = 100 + i;
    const LayoutResult r = place(n, c);
    CHECK(r.cost.total <= r.initial_cost.total);
    CHECK(recompute(r.placement, n, c.weights) == r.cost);
    CHECK(r.feasible == (r.cost.overlap_cells == 0));
    CHECK(r.bbox == bounding_box(r.placement, n));
  }
}

TEST_CASE("two-operator chain reaches the exhaustive optimum") {
  const Netlist n = parse_circuit("NOT(A; C) AND(C, B; Q)");
  const double opt = exhaustive_optimum(n, {}, 10);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SAConfig c;
    c.seed = seed;
    const LayoutResult r = place(n, c);
    CHECK(r.cost.total == doctest::Approx(opt));
  }
}

TEST_CASE("best-of restarts") {
  const Netlist n = parse_circuit("OR(A, B; C) NOT(C; D) Timer(D, 3; E) AND(D, E; F)");
  SAConfig c;
  c.seed = 9;
  const LayoutResult one = place(n, c);
  const LayoutResult four = place_best_of(n, c, 4);
  CHECK(four.cost.total <= one.cost.total);
  CHECK(four == place_best_of(n, c, 4));
  CHECK(four.seed >= 9);
  CHECK(four.seed <= 12);
}

TEST_CASE("svg export") {
  const Netlist single = parse_circuit("NOT(A; Q)");
  const std::string s1 = export_layout_svg(place(single), single);
  CHECK(well_formed(s1));
  CHECK(count(s1, "class=\"block\"") == 1);
  CHECK(s1.find("NOT #0") != std::string::npos);

  const Netlist dg = parse_circuit(
      "NOT(A; C) NOT(B; D) OR (C, D; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)");
  const std::string s = export_layout_svg(place(dg), dg);
  CHECK(well_formed(s));
  CHECK(count(s, "class=\"block\"") == 5);
  CHECK(count(s, "class=\"wire\"") == 6);
  for (const char* net : {"A", "B", "C", "D", "Q", "TimerOutput"}) {
    CHECK(s.find(std::string("data-net=\"") + net + "\"") != std::string::npos);
  }
}

TEST_CASE("json forms") {
  const Netlist n = parse_circuit("NOT(A; C) AND(C, B; Q)");
  const json j = layout_to_json(place(n));
  for (const char* key : {"placements", "cost", "seed", "bbox", "wires", "feasible"}) {
    CHECK(j.contains(key));
  }
  CHECK(j["placements"][0].contains("rot"));
  CHECK(j["cost"].contains("overlap"));
  CHECK(j["cost"].contains("wire"));
  CHECK(j["cost"].contains("area"));
  CHECK(j["cost"].contains("total"));

  const SAConfig c = sa_config_from_json(json::parse(
      R"({"seed":5,"w_overlap":10,"w_wire":2,"w_area":1,"cooling_alpha":0.9,"stall_epochs":5})"));
  CHECK(c.seed == 5);
  CHECK(c.weights.overlap == 10);
  CHECK(c.cooling_alpha == doctest::Approx(0.9));
  CHECK_THROWS_AS(sa_config_from_json(json::parse(R"({"cooling_alpha":1.0})")), Error);
  CHECK_THROWS_AS(sa_config_from_json(json::parse(R"({"w_overlap":0,"w_wire":0,"w_area":0})")), Error);
}
