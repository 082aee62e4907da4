#pragma once

// Heat-seal pattern dimensions for inflatable output airbags. All lengths in
// millimeters, angles in degrees.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fluidc/svg.hpp"
#include "json.hpp"

namespace fluidc {

enum class ShapeKind { Sphere, Cylinder, Box, Fold, Bend };

std::string_view shape_name(ShapeKind kind);  // "sphere", ...
/// Case-insensitive; throws BadRequest.
ShapeKind shape_from_name(std::string_view name);

struct ShapeRequest {
  ShapeKind kind = ShapeKind::Box;
  std::optional<double> radius;
  std::optional<double> length;
  std::optional<double> width;
  std::optional<double> height;
  std::optional<double> angle;
};

struct PatternResult {
  ShapeKind kind = ShapeKind::Box;
  double L = 0.0;  // sheet length
  double W = 0.0;  // sheet width
  std::optional<double> H;
  std::optional<double> radius_dim;  // cylinder: pi * r
  std::optional<double> d;
  std::optional<double> a;
  std::optional<double> D;
  std::optional<double> j;
  std::optional<int> n;
  std::optional<double> theta;
  /// Outline first, then seal tabs / marks.
  std::vector<std::vector<svg::Point>> seal_geometry;
};

PatternResult calc_sphere(double r);
PatternResult calc_cylinder(double r, double h);
PatternResult calc_box(double l, double w, double h);
PatternResult calc_fold(double l, double w, double angle);
PatternResult calc_bend(double l, double w, double angle);

/// Dispatches on kind; throws BadRequest when a required field is missing.
PatternResult calc_pattern(const ShapeRequest& request);

/// Crease center positions along L (fold and bend only).
std::vector<double> crease_positions(const PatternResult& result);

std::string pattern_svg(const PatternResult& result);

/// Accepts {"shape": ..., "radius"|"length"|"width"|"height"|"angle": ...}.
ShapeRequest shape_request_from_json(const nlohmann::json& j);
/// Dimensions rounded to 2 decimals, e.g. {"L":60,"W":10,"a":3.33,"d":8.08,"D":20,"n":2}.
nlohmann::json pattern_to_json(const PatternResult& result);

}  // namespace fluidc
