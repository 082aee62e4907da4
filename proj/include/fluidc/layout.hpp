#pragma once

// Grid placement of operator footprints by simulated annealing. The cost is
// a weighted sum of overlapping cells, port-to-port Manhattan wire length and
// bounding-box area.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fluidc/fchdl.hpp"
#include "json.hpp"

namespace fluidc {

enum class Edge { North, East, South, West };

struct PortTemplate {
  bool is_input;
  int index;  // position in OperatorInstance::inputs / outputs
  int dx;
  int dy;
  Edge edge;
};

struct OperatorTemplate {
  OperatorKind kind;
  int width;
  int height;
  std::vector<PortTemplate> ports;
};

/// Footprint and port table; data only, so it can be recalibrated.
const OperatorTemplate& operator_template(OperatorKind kind);

struct GridPoint {
  int x = 0;
  int y = 0;
  bool operator==(const GridPoint&) const = default;
};

struct GridRect {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // half-open [x0, x1) x [y0, y1)
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  long area() const { return static_cast<long>(width()) * height(); }
  bool operator==(const GridRect&) const = default;
};

struct PlacedOperator {
  int x = 0;
  int y = 0;
  int rot = 0;  // degrees, one of 0/90/180/270 (clockwise, y down)
  bool operator==(const PlacedOperator&) const = default;
};

/// Indexed by operator id.
using Placement = std::vector<PlacedOperator>;

GridRect footprint_rect(OperatorKind kind, const PlacedOperator& p);
/// Absolute cell of an operator port after rotation.
GridPoint port_cell(OperatorKind kind, const PlacedOperator& p, bool is_input, int index);
Edge port_edge(OperatorKind kind, const PlacedOperator& p, bool is_input, int index);

struct CostWeights {
  double overlap = 1000.0;
  double wire = 1.0;
  double area = 2.0;
};

struct CostBreakdown {
  long overlap_cells = 0;
  long wire = 0;
  long area = 0;
  double total = 0.0;
  bool operator==(const CostBreakdown&) const = default;
};

CostBreakdown layout_cost(const Placement& placement, const Netlist& netlist,
                          const CostWeights& weights = {});
GridRect bounding_box(const Placement& placement, const Netlist& netlist);

struct SAConfig {
  std::uint64_t seed = 42;
  CostWeights weights;
  /// Unset means 100 x operator count.
  std::optional<int> moves_per_epoch;
  double cooling_alpha = 0.95;
  double initial_acceptance = 0.8;
  double min_temperature_ratio = 1e-4;
  int stall_epochs = 20;
  /// Side of the square working grid; unset means sized from the footprints.
  std::optional<int> grid_size;

  void validate() const;
};

struct WireSegment {
  std::string net;
  GridPoint from;
  GridPoint to;
  bool from_pad = false;  // primary input stub from the left edge
};

struct LayoutResult {
  Placement placement;
  CostBreakdown cost;
  CostBreakdown initial_cost;
  std::vector<WireSegment> wires;
  GridRect bbox;
  std::uint64_t seed = 0;
  int grid_size = 0;
  bool feasible = true;  // false when overlap could not be eliminated

  bool operator==(const LayoutResult& o) const {
    return placement == o.placement && cost == o.cost && initial_cost == o.initial_cost &&
           bbox == o.bbox && seed == o.seed && grid_size == o.grid_size &&
           feasible == o.feasible;
  }
};

int default_grid_size(const Netlist& netlist);

/// Throws InvalidNetlist for an empty netlist. An infeasible result is
/// returned with `feasible == false` rather than thrown.
LayoutResult place(const Netlist& netlist, const SAConfig& config = {});
/// Runs `restarts` independent seeds (seed, seed+1, ...) in parallel and
/// keeps the cheapest; ties go to the lower seed.
LayoutResult place_best_of(const Netlist& netlist, const SAConfig& config, int restarts);

std::vector<WireSegment> route_wires(const Placement& placement, const Netlist& netlist);

std::string export_layout_svg(const LayoutResult& result, const Netlist& netlist);

nlohmann::json layout_to_json(const LayoutResult& result);
nlohmann::json cost_to_json(const CostBreakdown& cost);
SAConfig sa_config_from_json(const nlohmann::json& j);

}  // namespace fluidc
