#include "fluidc/patterns.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

#include "fluidc/error.hpp"

namespace fluidc {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBendCreaseAngle = 20.0;

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw Error(ErrorCode::NonPositiveDimension, std::string(what) + " must be > 0");
}

// Empirical crease law: tab spacing for a crease angle on a sheet of width w.
double crease_spacing(double theta, double w) { return (theta - 51.50) / (-0.65 * 60.0 / w); }

std::vector<svg::Point> rectangle(double x, double y, double w, double h) {
  return {{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}, {x, y}};
}

void add_creases(PatternResult& r) {
  const double a = *r.a;
  const double d = *r.d;
  for (double xc : crease_positions(r)) {
    r.seal_geometry.push_back(rectangle(xc - d / 2, 0.0, d, a));
    r.seal_geometry.push_back(rectangle(xc - d / 2, r.W - a, d, a));
  }
}

nlohmann::json dim(double v) {
  const double r = std::round(v * 100.0) / 100.0;
  if (r == std::floor(r) && std::abs(r) < 1e15) return static_cast<long long>(r);
  return r;
}

}  // namespace

std::string_view shape_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Sphere: return "sphere";
    case ShapeKind::Cylinder: return "cylinder";
    case ShapeKind::Box: return "box";
    case ShapeKind::Fold: return "fold";
    case ShapeKind::Bend: return "bend";
  }
  return "box";
}

ShapeKind shape_from_name(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower.rfind("calculate_", 0) == 0) lower = lower.substr(10);
  for (auto k : {ShapeKind::Sphere, ShapeKind::Cylinder, ShapeKind::Box, ShapeKind::Fold,
                 ShapeKind::Bend}) {
    if (lower == shape_name(k)) return k;
  }
  throw Error(ErrorCode::BadRequest, "unknown shape '" + std::string(name) + "'");
}

PatternResult calc_sphere(double r) {
  require_positive(r, "radius");
  PatternResult p;
  p.kind = ShapeKind::Sphere;
  p.L = 2.0 * kPi * r;
  p.W = kPi * r;
  p.d = p.L / 16.0;
  p.seal_geometry.push_back(rectangle(0, 0, p.L, p.W));
  for (int i = 0; i < 16; ++i) {
    const double x = (i + 0.5) * *p.d;
    p.seal_geometry.push_back({{x, 0.0}, {x, p.W}});
  }
  return p;
}

PatternResult calc_cylinder(double r, double h) {
  require_positive(r, "radius");
  require_positive(h, "height");
  PatternResult p;
  p.kind = ShapeKind::Cylinder;
  p.L = 2.0 * kPi * r;
  p.radius_dim = kPi * r;
  p.H = h;
  p.W = h;
  p.seal_geometry.push_back(rectangle(0, 0, p.L, h));
  return p;
}

PatternResult calc_box(double l, double w, double h) {
  require_positive(l, "length");
  require_positive(w, "width");
  require_positive(h, "height");
  PatternResult p;
  p.kind = ShapeKind::Box;
  p.L = l;
  p.W = w;
  p.H = h;
  p.seal_geometry.push_back(rectangle(0, 0, l, w));
  return p;
}

PatternResult calc_fold(double l, double w, double angle) {
  require_positive(l, "length");
  require_positive(w, "width");
  if (!(angle > 0.0 && angle <= 180.0))
    throw Error(ErrorCode::AngleOutOfRange, "fold angle must be in (0, 180]");
  PatternResult p;
  p.kind = ShapeKind::Fold;
  p.L = l;
  p.W = w;
  p.a = w / 3.0;
  p.D = w;
  const int n = angle <= 45.0 ? 1 : angle <= 90.0 ? 2 : angle <= 135.0 ? 3 : 4;
  p.n = n;
  p.theta = angle / n;
  p.d = crease_spacing(*p.theta, w);
  p.j = (l - (n - 1) * w) / 2.0;
  if (*p.j <= 0.0)
    throw Error(ErrorCode::SheetTooShort, "sheet too short for " + std::to_string(n) + " creases");
  p.seal_geometry.push_back(rectangle(0, 0, l, w));
  add_creases(p);
  return p;
}

PatternResult calc_bend(double l, double w, double angle) {
  require_positive(l, "length");
  require_positive(w, "width");
  if (!(angle >= kBendCreaseAngle && angle <= 180.0))
    throw Error(ErrorCode::AngleOutOfRange, "bend angle must be in [20, 180]");
  PatternResult p;
  p.kind = ShapeKind::Bend;
  p.L = l;
  p.W = w;
  p.n = static_cast<int>(angle / kBendCreaseAngle);
  p.D = l / (*p.n + 1);
  p.d = crease_spacing(kBendCreaseAngle, w);
  p.a = w / 3.0;
  p.theta = kBendCreaseAngle;
  p.seal_geometry.push_back(rectangle(0, 0, l, w));
  add_creases(p);
  return p;
}

PatternResult calc_pattern(const ShapeRequest& q) {
  auto need = [&](const std::optional<double>& v, const char* name) {
    if (!v) throw Error(ErrorCode::BadRequest, std::string("missing '") + name + "'");
    return *v;
  };
  switch (q.kind) {
    case ShapeKind::Sphere: return calc_sphere(need(q.radius, "radius"));
    case ShapeKind::Cylinder:
      return calc_cylinder(need(q.radius, "radius"), need(q.height, "height"));
    case ShapeKind::Box:
      return calc_box(need(q.length, "length"), need(q.width, "width"), need(q.height, "height"));
    case ShapeKind::Fold:
      return calc_fold(need(q.length, "length"), need(q.width, "width"), need(q.angle, "angle"));
    case ShapeKind::Bend:
      return calc_bend(need(q.length, "length"), need(q.width, "width"), need(q.angle, "angle"));
  }
  throw Error(ErrorCode::BadRequest, "unknown shape");
}

std::vector<double> crease_positions(const PatternResult& r) {
  std::vector<double> xs;
  if (!r.n || !r.D) return xs;
  if (r.kind == ShapeKind::Fold) {
    for (int i = 0; i < *r.n; ++i) xs.push_back(*r.j + i * *r.D);
  } else if (r.kind == ShapeKind::Bend) {
    for (int i = 1; i <= *r.n; ++i) xs.push_back(i * *r.D);
  }
  return xs;
}

std::string pattern_svg(const PatternResult& r) {
  const double margin = 5.0;
  const double h = r.kind == ShapeKind::Cylinder ? *r.H : r.W;
  svg::Document doc(r.L + 2 * margin, h + 2 * margin, -margin, -margin);
  doc.open_group(std::string("class=\"pattern\" data-shape=\"") + std::string(shape_name(r.kind)) +
                 "\" fill=\"none\" stroke=\"#000\" stroke-width=\"0.3\"");
  for (std::size_t i = 0; i < r.seal_geometry.size(); ++i) {
    const char* cls = i == 0 ? "outline" : (r.kind == ShapeKind::Sphere ? "tab-mark" : "seal");
    std::string attrs = std::string("class=\"") + cls + "\"";
    if (i > 0 && r.kind != ShapeKind::Sphere) attrs += " fill=\"#999\"";
    doc.polyline(r.seal_geometry[i], attrs);
  }
  doc.close_group();
  return doc.str();
}

ShapeRequest shape_request_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::BadRequest, "shape request must be an object");
  const auto shape = j.find("shape") != j.end() ? j.find("shape") : j.find("kind");
  if (shape == j.end() || !shape->is_string())
    throw Error(ErrorCode::BadRequest, "missing 'shape'");
  ShapeRequest q;
  q.kind = shape_from_name(shape->get<std::string>());
  auto read = [&](const char* key, std::optional<double>& out) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return;
    if (it->is_number()) {
      out = it->get<double>();
    } else if (it->is_string()) {
      try {
        out = std::stod(it->get<std::string>());
      } catch (const std::exception&) {
        throw Error(ErrorCode::BadRequest, std::string("'") + key + "' is not a number");
      }
    } else {
      throw Error(ErrorCode::BadRequest, std::string("'") + key + "' is not a number");
    }
  };
  read("radius", q.radius);
  read("length", q.length);
  read("width", q.width);
  read("height", q.height);
  read("angle", q.angle);
  return q;
}

nlohmann::json pattern_to_json(const PatternResult& r) {
  nlohmann::json j = {{"shape", shape_name(r.kind)}, {"L", dim(r.L)}};
  if (r.radius_dim) {
    j["R"] = dim(*r.radius_dim);
  } else {
    j["W"] = dim(r.W);
  }
  if (r.H) j["H"] = dim(*r.H);
  if (r.a) j["a"] = dim(*r.a);
  if (r.d) j["d"] = dim(*r.d);
  if (r.D) j["D"] = dim(*r.D);
  if (r.j) j["j"] = dim(*r.j);
  if (r.n) j["n"] = *r.n;
  if (r.theta) j["theta"] = dim(*r.theta);
  return j;
}

}  // namespace fluidc
