#include <boost/property_tree/xml_parser.hpp>
#include <cmath>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "fluidc/error.hpp"
#include "fluidc/patterns.hpp"

using namespace fluidc;
using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
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

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

// Crease gap straight from the empirical line, evaluated here by hand.
double gap(double theta, double w) { return (51.5 - theta) * w / 39.0; }

}  // namespace

TEST_CASE("sphere") {
  const auto p = calc_sphere(12.7);
  // Printed values come from pi = 3.14; both readings fall within 0.1 mm.
  CHECK(std::abs(p.L - 79.76) <= 0.1);
  CHECK(std::abs(p.W - 39.88) <= 0.1);
  CHECK(std::abs(*p.d - 4.98) <= 0.1);

  const auto q = calc_sphere(8);
  CHECK(q.L == doctest::Approx(2 * kPi * 8));
  CHECK(q.W == doctest::Approx(kPi * 8));
  CHECK(*q.d == doctest::Approx(kPi));
  CHECK(error_of([] { calc_sphere(0); }) == ErrorCode::NonPositiveDimension);
  CHECK(error_of([] { calc_sphere(-2); }) == ErrorCode::NonPositiveDimension);
}

TEST_CASE("sphere scales linearly") {
  for (double r : {0.5, 3.0, 12.7, 40.0}) {
    const auto base = calc_sphere(r);
    const auto scaled = calc_sphere(3 * r);
    CHECK(scaled.L == doctest::Approx(3 * base.L));
    CHECK(scaled.W == doctest::Approx(3 * base.W));
    CHECK(*scaled.d == doctest::Approx(3 * *base.d));
  }
}

TEST_CASE("cylinder") {
  const auto p = calc_cylinder(10, 50);
  CHECK(p.L == doctest::Approx(62.832).epsilon(1e-4));
  CHECK(*p.radius_dim == doctest::Approx(31.416).epsilon(1e-4));
  CHECK(*p.H == 50);
  CHECK(calc_cylinder(1 / (2 * kPi), 1).L == doctest::Approx(1.0));
  CHECK(error_of([] { calc_cylinder(0, 5); }) == ErrorCode::NonPositiveDimension);
  CHECK(error_of([] { calc_cylinder(5, 0); }) == ErrorCode::NonPositiveDimension);
}

TEST_CASE("box passthrough") {
  const auto p = calc_box(230, 150, 75);
  CHECK(p.L == 230);
  CHECK(p.W == 150);
  CHECK(*p.H == 75);
  const auto unit = calc_box(1, 1, 1);
  CHECK(unit.L == 1);
  CHECK(error_of([] { calc_box(0, 1, 1); }) == ErrorCode::NonPositiveDimension);
}

TEST_CASE("fold") {
  const auto one = calc_fold(100, 30, 45);
  CHECK(*one.n == 1);
  CHECK(*one.theta == doctest::Approx(45));
  CHECK(*one.a == doctest::Approx(10));
  CHECK(*one.D == doctest::Approx(30));
  CHECK(*one.d == doctest::Approx(5.0));
  CHECK(*one.j == doctest::Approx(50));

  const auto two = calc_fold(100, 30, 60);
  CHECK(*two.n == 2);
  CHECK(*two.theta == doctest::Approx(30));
  CHECK(*two.d == doctest::Approx(16.54).epsilon(1e-3));
  CHECK(*two.j == doctest::Approx(35));

  CHECK(error_of([] { calc_fold(100, 30, 181); }) == ErrorCode::AngleOutOfRange);
  CHECK(error_of([] { calc_fold(100, 30, 0); }) == ErrorCode::AngleOutOfRange);
  CHECK(error_of([] { calc_fold(60, 30, 170); }) == ErrorCode::SheetTooShort);
  CHECK(error_of([] { calc_fold(0, 30, 45); }) == ErrorCode::NonPositiveDimension);
}

TEST_CASE("fold invariants") {
  for (double alpha = 1; alpha <= 180; alpha += 7) {
    for (double w : {5.0, 12.0, 30.0}) {
      const auto p = calc_fold(400, w, alpha);
      CAPTURE(alpha);
      CHECK(*p.theta * *p.n == doctest::Approx(alpha));
      CHECK(*p.theta <= 45.0);
      CHECK(*p.d > 0);
      CHECK(*p.d == doctest::Approx(gap(*p.theta, w)));
      const int want_n = alpha <= 45 ? 1 : alpha <= 90 ? 2 : alpha <= 135 ? 3 : 4;
      CHECK(*p.n == want_n);
      // Creases mirror about the midline along L.
      const auto xs = crease_positions(p);
      REQUIRE(xs.size() == static_cast<std::size_t>(want_n));
      for (std::size_t i = 0; i < xs.size(); ++i) {
        CHECK(xs[i] + xs[xs.size() - 1 - i] == doctest::Approx(p.L));
      }
    }
  }
}

TEST_CASE("bend") {
  const auto p = calc_bend(60, 10, 45);
  CHECK(std::round(*p.a * 100) / 100 == doctest::Approx(3.33));
  CHECK(std::round(*p.d * 100) / 100 == doctest::Approx(8.08));
  CHECK(*p.D == doctest::Approx(20));
  CHECK(*p.n == 2);
  const auto xs = crease_positions(p);
  REQUIRE(xs.size() == 2);
  CHECK(xs[0] == doctest::Approx(20));
  CHECK(xs[1] == doctest::Approx(40));

  const auto q = calc_bend(90, 39, 100);
  CHECK(*q.n == 5);
  CHECK(*q.D == doctest::Approx(15));
  CHECK(*q.d == doctest::Approx(31.5));
  CHECK(*q.a == doctest::Approx(13));

  CHECK(error_of([] { calc_bend(60, 10, 19); }) == ErrorCode::AngleOutOfRange);
  CHECK(error_of([] { calc_bend(60, 10, 181); }) == ErrorCode::AngleOutOfRange);
}

TEST_CASE("bend properties") {
  for (double w = 1; w <= 60; w += 3.5) {
    CHECK(*calc_bend(100, w, 45).d == doctest::Approx(31.5 * w / 39.0));
    CHECK(*calc_bend(100, w, 45).d == doctest::Approx(0.8077 * w).epsilon(1e-4));
  }
  int last = 0;
  for (double alpha = 20; alpha <= 180; alpha += 0.5) {
    const int n = *calc_bend(100, 10, alpha).n;
    CHECK(n >= last);
    CHECK(n == static_cast<int>(std::floor(alpha / 20)));
    last = n;
  }
}

TEST_CASE("dispatch and request parsing") {
  const auto r = shape_request_from_json(json::parse(R"({"shape":"Bend","length":60,"width":10,"angle":45})"));
  CHECK(r.kind == ShapeKind::Bend);
  const json got = pattern_to_json(calc_pattern(r));
  const json want = json::parse(R"({"L":60,"W":10,"a":3.33,"d":8.08,"D":20,"n":2})");
  for (const auto& [k, v] : want.items()) {
    CAPTURE(k);
    CHECK(got.at(k) == v);
  }
  CHECK(error_of([] { calc_pattern(shape_request_from_json(json::parse(R"({"shape":"fold","length":60})"))); }) ==
        ErrorCode::BadRequest);
  CHECK(error_of([] { shape_request_from_json(json::parse(R"({"shape":"blob"})")); }) == ErrorCode::BadRequest);
  CHECK(error_of([] { shape_request_from_json(json::parse(R"({"shape":"sphere","radius":"big"})")); }) ==
        ErrorCode::BadRequest);
  CHECK(pattern_to_json(calc_sphere(12.7))["L"] == 79.8);
}

TEST_CASE("svg output") {
  const auto bend = calc_bend(60, 10, 45);
  const std::string s = pattern_svg(bend);
  CHECK(well_formed(s));
  CHECK(count(s, "class=\"outline\"") == 1);
  CHECK(count(s, "class=\"seal\"") == 4);

  const std::string sphere = pattern_svg(calc_sphere(12.7));
  CHECK(well_formed(sphere));
  CHECK(count(sphere, "class=\"tab-mark\"") == 16);

  const std::string box = pattern_svg(calc_box(230, 150, 75));
  CHECK(well_formed(box));
  CHECK(count(box, "class=\"seal\"") == 0);

  for (double alpha : {10.0, 60.0, 100.0, 170.0}) {
    CHECK(well_formed(pattern_svg(calc_fold(300, 20, alpha))));
  }
  CHECK(well_formed(pattern_svg(calc_cylinder(10, 50))));
}

TEST_CASE("seal tabs sit at the crease centers") {
  const auto p = calc_bend(60, 10, 45);
  REQUIRE(p.seal_geometry.size() == 5);
  for (std::size_t i = 1; i < p.seal_geometry.size(); ++i) {
    const auto& poly = p.seal_geometry[i];
    double x0 = poly[0].first, x1 = poly[0].first, y0 = poly[0].second, y1 = poly[0].second;
    for (const auto& pt : poly) {
      x0 = std::min(x0, pt.first);
      x1 = std::max(x1, pt.first);
      y0 = std::min(y0, pt.second);
      y1 = std::max(y1, pt.second);
    }
    CHECK(x1 - x0 == doctest::Approx(*p.d));
    CHECK(y1 - y0 == doctest::Approx(*p.a));
    const double center = (x0 + x1) / 2;
    CHECK((center == doctest::Approx(20) || center == doctest::Approx(40)));
  }
}
