#include "fluidc/layout.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <random>

#include "fluidc/error.hpp"
#include "fluidc/svg.hpp"

namespace fluidc {

namespace {

using E = Edge;

// Footprints: gates 2x2; Filter/Timer/EdgeDetector/Register 2x3; Mux/Demux
// 3x4; Diode 1x2. Inputs enter from the west, outputs leave to the east.
const std::vector<OperatorTemplate>& templates() {
  static const std::vector<OperatorTemplate> table = [] {
    std::vector<OperatorTemplate> t;
    const PortTemplate one_in{true, 0, 0, 0, E::West};
    const PortTemplate gate_out{false, 0, 1, 0, E::East};
    t.push_back({OperatorKind::Not, 2, 2, {one_in, gate_out}});
    for (auto k : {OperatorKind::Or, OperatorKind::And, OperatorKind::Nor, OperatorKind::Nand,
                   OperatorKind::Xor}) {
      t.push_back({k, 2, 2, {one_in, {true, 1, 0, 1, E::West}, gate_out}});
    }
    for (auto k : {OperatorKind::Filter, OperatorKind::Timer, OperatorKind::EdgeDetector}) {
      t.push_back({k, 2, 3, {{true, 0, 0, 1, E::West}, {false, 0, 1, 1, E::East}}});
    }
    t.push_back({OperatorKind::Register, 2, 3,
                 {{true, 0, 0, 0, E::West},
                  {true, 1, 0, 2, E::West},
                  {false, 0, 1, 0, E::East},
                  {false, 1, 1, 2, E::East}}});
    t.push_back({OperatorKind::Multiplexer, 3, 4,
                 {{true, 0, 0, 0, E::West},
                  {true, 1, 0, 1, E::West},
                  {true, 2, 0, 2, E::West},
                  {true, 3, 0, 3, E::West},
                  {true, 4, 1, 3, E::South},
                  {true, 5, 2, 3, E::South},
                  {false, 0, 2, 1, E::East}}});
    t.push_back({OperatorKind::Demultiplexer, 3, 4,
                 {{true, 0, 0, 1, E::West},
                  {true, 1, 1, 0, E::North},
                  {true, 2, 1, 3, E::South},
                  {false, 0, 2, 0, E::East},
                  {false, 1, 2, 1, E::East},
                  {false, 2, 2, 2, E::East},
                  {false, 3, 2, 3, E::East}}});
    t.push_back({OperatorKind::Diode, 1, 2,
                 {{true, 0, 0, 0, E::North}, {false, 0, 0, 1, E::South}}});
    return t;
  }();
  return table;
}

const PortTemplate& find_port(OperatorKind kind, bool is_input, int index) {
  for (const auto& p : operator_template(kind).ports) {
    if (p.is_input == is_input && p.index == index) return p;
  }
  throw Error(ErrorCode::InvalidNetlist, "no such port");
}

// Quarter turns clockwise of a cell inside a w x h box.
GridPoint rotate_cell(int x, int y, int w, int h, int quarter) {
  for (int q = 0; q < quarter; ++q) {
    const int nx = h - 1 - y;
    const int ny = x;
    x = nx;
    y = ny;
    std::swap(w, h);
  }
  return {x, y};
}

int quarters(int rot) { return ((rot / 90) % 4 + 4) % 4; }

long overlap(const GridRect& a, const GridRect& b) {
  const int w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const int h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  return (w > 0 && h > 0) ? static_cast<long>(w) * h : 0;
}

long manhattan(GridPoint a, GridPoint b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }

// Driver/consumer port pairs, precomputed once per netlist.
struct Connection {
  std::size_t from_op;
  int from_port;
  std::size_t to_op;
  int to_port;
};

std::vector<Connection> connections(const Netlist& netlist) {
  std::vector<Connection> out;
  const auto& ops = netlist.operators();
  for (const auto& drv : ops) {
    for (std::size_t o = 0; o < drv.outputs.size(); ++o) {
      const auto& net = drv.outputs[o];
      for (const auto& con : ops) {
        for (std::size_t i = 0; i < con.inputs.size(); ++i) {
          if (con.inputs[i] == net)
            out.push_back({drv.id, static_cast<int>(o), con.id, static_cast<int>(i)});
        }
      }
    }
  }
  return out;
}

class CostModel {
 public:
  CostModel(const Netlist& netlist, const CostWeights& weights)
      : netlist_(netlist), weights_(weights), links_(connections(netlist)) {}

  CostBreakdown operator()(const Placement& p) const {
    const auto& ops = netlist_.operators();
    std::vector<GridRect> rects;
    rects.reserve(ops.size());
    for (const auto& op : ops) rects.push_back(footprint_rect(op.kind, p[op.id]));
    CostBreakdown c;
    GridRect box = rects.empty() ? GridRect{} : rects[0];
    for (std::size_t i = 0; i < rects.size(); ++i) {
      for (std::size_t j = i + 1; j < rects.size(); ++j) c.overlap_cells += overlap(rects[i], rects[j]);
      box.x0 = std::min(box.x0, rects[i].x0);
      box.y0 = std::min(box.y0, rects[i].y0);
      box.x1 = std::max(box.x1, rects[i].x1);
      box.y1 = std::max(box.y1, rects[i].y1);
    }
    for (const auto& l : links_) {
      c.wire += manhattan(port_cell(ops[l.from_op].kind, p[l.from_op], false, l.from_port),
                          port_cell(ops[l.to_op].kind, p[l.to_op], true, l.to_port));
    }
    c.area = box.area();
    c.total = weights_.overlap * static_cast<double>(c.overlap_cells) +
              weights_.wire * static_cast<double>(c.wire) +
              weights_.area * static_cast<double>(c.area);
    return c;
  }

 private:
  const Netlist& netlist_;
  CostWeights weights_;
  std::vector<Connection> links_;
};

void clamp_into_grid(PlacedOperator& p, OperatorKind kind, int grid) {
  const auto r = footprint_rect(kind, {0, 0, p.rot});
  p.x = std::clamp(p.x, 0, grid - r.width());
  p.y = std::clamp(p.y, 0, grid - r.height());
}

}  // namespace

const OperatorTemplate& operator_template(OperatorKind kind) {
  for (const auto& t : templates()) {
    if (t.kind == kind) return t;
  }
  return templates().front();
}

GridRect footprint_rect(OperatorKind kind, const PlacedOperator& p) {
  const auto& t = operator_template(kind);
  const bool swapped = quarters(p.rot) % 2 == 1;
  const int w = swapped ? t.height : t.width;
  const int h = swapped ? t.width : t.height;
  return {p.x, p.y, p.x + w, p.y + h};
}

GridPoint port_cell(OperatorKind kind, const PlacedOperator& p, bool is_input, int index) {
  const auto& t = operator_template(kind);
  const auto& port = find_port(kind, is_input, index);
  const GridPoint local = rotate_cell(port.dx, port.dy, t.width, t.height, quarters(p.rot));
  return {p.x + local.x, p.y + local.y};
}

Edge port_edge(OperatorKind kind, const PlacedOperator& p, bool is_input, int index) {
  const auto& port = find_port(kind, is_input, index);
  return static_cast<Edge>((static_cast<int>(port.edge) + quarters(p.rot)) % 4);
}

CostBreakdown layout_cost(const Placement& placement, const Netlist& netlist,
                          const CostWeights& weights) {
  if (placement.size() != netlist.operators().size())
    throw Error(ErrorCode::BadRequest, "placement does not cover every operator");
  return CostModel(netlist, weights)(placement);
}

GridRect bounding_box(const Placement& placement, const Netlist& netlist) {
  GridRect box;
  bool first = true;
  for (const auto& op : netlist.operators()) {
    const auto r = footprint_rect(op.kind, placement[op.id]);
    if (first) {
      box = r;
      first = false;
      continue;
    }
    box.x0 = std::min(box.x0, r.x0);
    box.y0 = std::min(box.y0, r.y0);
    box.x1 = std::max(box.x1, r.x1);
    box.y1 = std::max(box.y1, r.y1);
  }
  return box;
}

void SAConfig::validate() const {
  if (weights.overlap < 0 || weights.wire < 0 || weights.area < 0)
    throw Error(ErrorCode::InvalidConfig, "cost weights must be non-negative");
  if (weights.overlap == 0 && weights.wire == 0 && weights.area == 0)
    throw Error(ErrorCode::InvalidConfig, "cost weights must not all be zero");
  if (!(cooling_alpha > 0.0 && cooling_alpha < 1.0))
    throw Error(ErrorCode::InvalidConfig, "cooling_alpha must be in (0, 1)");
  if (!(initial_acceptance > 0.0 && initial_acceptance < 1.0))
    throw Error(ErrorCode::InvalidConfig, "initial_acceptance must be in (0, 1)");
  if (moves_per_epoch && *moves_per_epoch < 1)
    throw Error(ErrorCode::InvalidConfig, "moves_per_epoch must be positive");
  if (!(min_temperature_ratio > 0.0 && min_temperature_ratio < 1.0))
    throw Error(ErrorCode::InvalidConfig, "min_temperature_ratio must be in (0, 1)");
  if (stall_epochs < 1) throw Error(ErrorCode::InvalidConfig, "stall_epochs must be positive");
  if (grid_size && *grid_size < 4) throw Error(ErrorCode::InvalidConfig, "grid_size too small");
}

int default_grid_size(const Netlist& netlist) {
  long area = 0;
  int longest = 1;
  for (const auto& op : netlist.operators()) {
    const auto& t = operator_template(op.kind);
    area += static_cast<long>(t.width) * t.height;
    longest = std::max({longest, t.width, t.height});
  }
  const int side = static_cast<int>(std::ceil(2.0 * std::sqrt(static_cast<double>(area)))) + longest;
  return std::max(10, side);
}

LayoutResult place(const Netlist& netlist, const SAConfig& config) {
  config.validate();
  if (netlist.empty()) throw Error(ErrorCode::InvalidNetlist, "cannot place an empty netlist");
  const auto& ops = netlist.operators();
  const std::size_t count = ops.size();
  const int grid = config.grid_size.value_or(default_grid_size(netlist));
  for (const auto& op : ops) {
    const auto& t = operator_template(op.kind);
    if (std::max(t.width, t.height) > grid)
      throw Error(ErrorCode::InvalidConfig, "grid too small for operator footprints");
  }
  const int moves = config.moves_per_epoch.value_or(static_cast<int>(100 * count));
  const CostModel cost(netlist, config.weights);

  std::mt19937_64 rng(config.seed);
  auto uniform_int = [&](int lo, int hi) {  // inclusive
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  };
  auto uniform01 = [&] { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); };

  Placement current(count);
  for (const auto& op : ops) {
    auto& p = current[op.id];
    p.rot = 90 * uniform_int(0, 3);
    const auto r = footprint_rect(op.kind, {0, 0, p.rot});
    p.x = uniform_int(0, grid - r.width());
    p.y = uniform_int(0, grid - r.height());
  }
  CostBreakdown current_cost = cost(current);
  const CostBreakdown initial_cost = current_cost;
  Placement best = current;
  CostBreakdown best_cost = current_cost;

  // Proposes a neighbour of `from` by moving or turning one operator.
  auto propose = [&](const Placement& from) {
    Placement next = from;
    const std::size_t i = static_cast<std::size_t>(uniform_int(0, static_cast<int>(count) - 1));
    auto& p = next[i];
    if (uniform01() < 0.5) {
      const GridRect box = bounding_box(from, netlist);
      const auto r = footprint_rect(ops[i].kind, {0, 0, p.rot});
      const int margin = 2;
      const int x_lo = std::max(0, box.x0 - margin);
      const int y_lo = std::max(0, box.y0 - margin);
      const int x_hi = std::min(grid - r.width(), box.x1 + margin - r.width());
      const int y_hi = std::min(grid - r.height(), box.y1 + margin - r.height());
      p.x = x_hi >= x_lo ? uniform_int(x_lo, x_hi) : x_lo;
      p.y = y_hi >= y_lo ? uniform_int(y_lo, y_hi) : y_lo;
    } else {
      p.rot = (p.rot + 90 * uniform_int(1, 3)) % 360;
    }
    clamp_into_grid(p, ops[i].kind, grid);
    return next;
  };

  // Starting temperature: accept roughly `initial_acceptance` of uphill moves.
  double uphill_sum = 0.0;
  int uphill = 0;
  for (int m = 0; m < moves; ++m) {
    const double delta = cost(propose(current)).total - current_cost.total;
    if (delta > 0) {
      uphill_sum += delta;
      ++uphill;
    }
  }
  const double t0 =
      uphill > 0 ? -(uphill_sum / uphill) / std::log(config.initial_acceptance) : 1.0;

  double temperature = t0;
  int stalled = 0;
  while (temperature > t0 * config.min_temperature_ratio && stalled < config.stall_epochs) {
    const double epoch_start = current_cost.total;
    bool moved = false;
    for (int m = 0; m < moves; ++m) {
      Placement next = propose(current);
      const CostBreakdown next_cost = cost(next);
      const double delta = next_cost.total - current_cost.total;
      if (delta <= 0.0 || uniform01() < std::exp(-delta / temperature)) {
        if (next != current) moved = true;
        current = std::move(next);
        current_cost = next_cost;
        if (current_cost.total < best_cost.total) {
          best = current;
          best_cost = current_cost;
        }
      }
    }
    // Frozen: the walk neither moved nor changed cost for a whole epoch.
    stalled = (!moved && current_cost.total == epoch_start) ? stalled + 1 : 0;
    temperature *= config.cooling_alpha;
  }

  // Normalise so the bounding box starts at the grid origin.
  const GridRect box = bounding_box(best, netlist);
  for (auto& p : best) {
    p.x -= box.x0;
    p.y -= box.y0;
  }

  LayoutResult result;
  result.placement = best;
  result.cost = cost(best);
  result.initial_cost = initial_cost;
  result.bbox = bounding_box(best, netlist);
  result.wires = route_wires(best, netlist);
  result.seed = config.seed;
  result.grid_size = grid;
  result.feasible = result.cost.overlap_cells == 0;
  return result;
}

LayoutResult place_best_of(const Netlist& netlist, const SAConfig& config, int restarts) {
  if (restarts <= 1) return place(netlist, config);
  std::vector<std::future<LayoutResult>> runs;
  for (int k = 0; k < restarts; ++k) {
    SAConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(k);
    runs.push_back(std::async(std::launch::async, [&netlist, c] { return place(netlist, c); }));
  }
  std::optional<LayoutResult> best;
  for (auto& f : runs) {
    LayoutResult r = f.get();
    if (!best || r.cost.total < best->cost.total) best = std::move(r);
  }
  return *best;
}

std::vector<WireSegment> route_wires(const Placement& placement, const Netlist& netlist) {
  std::vector<WireSegment> out;
  const auto& ops = netlist.operators();
  const GridRect box = bounding_box(placement, netlist);
  for (const auto& l : connections(netlist)) {
    out.push_back({ops[l.from_op].outputs[static_cast<std::size_t>(l.from_port)],
                   port_cell(ops[l.from_op].kind, placement[l.from_op], false, l.from_port),
                   port_cell(ops[l.to_op].kind, placement[l.to_op], true, l.to_port), false});
  }
  for (const auto& net : netlist.primary_inputs()) {
    for (std::size_t id : netlist.consumers(net)) {
      const auto& op = ops[id];
      for (std::size_t i = 0; i < op.inputs.size(); ++i) {
        if (op.inputs[i] != net) continue;
        const GridPoint to = port_cell(op.kind, placement[id], true, static_cast<int>(i));
        out.push_back({net, {box.x0 - 1, to.y}, to, true});
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string export_layout_svg(const LayoutResult& result, const Netlist& netlist) {
  constexpr double kCell = 10.0;  // mm per grid cell
  const GridRect box = result.bbox;
  const double min_x = (box.x0 - 2) * kCell;
  const double min_y = (box.y0 - 1) * kCell;
  const double width = (box.width() + 3) * kCell;
  const double height = (box.height() + 2) * kCell;
  svg::Document doc(width, height, min_x, min_y);

  auto center = [&](GridPoint p) {
    return svg::Point{(p.x + 0.5) * kCell, (p.y + 0.5) * kCell};
  };

  doc.open_group("id=\"operators\"");
  for (const auto& op : netlist.operators()) {
    const auto r = footprint_rect(op.kind, result.placement[op.id]);
    const std::string label = std::string(hdl_name(op.kind)) + " #" + std::to_string(op.id);
    doc.open_group("class=\"operator\" data-id=\"" + std::to_string(op.id) + "\" data-kind=\"" +
                   std::string(kind_name(op.kind)) + "\"");
    doc.rect(r.x0 * kCell, r.y0 * kCell, r.width() * kCell, r.height() * kCell,
             "class=\"block\" fill=\"#e8eef7\" stroke=\"#1d3557\" stroke-width=\"0.6\"");
    doc.text((r.x0 + r.width() / 2.0) * kCell, (r.y0 + r.height() / 2.0) * kCell, label,
             "class=\"label\" font-size=\"3\" text-anchor=\"middle\" dominant-baseline=\"middle\"");
    // Port ticks on the footprint edge.
    for (const auto& port : operator_template(op.kind).ports) {
      const auto& placed = result.placement[op.id];
      const GridPoint c = port_cell(op.kind, placed, port.is_input, port.index);
      const Edge e = port_edge(op.kind, placed, port.is_input, port.index);
      const auto [cx, cy] = center(c);
      double x2 = cx, y2 = cy;
      switch (e) {
        case Edge::North: y2 = c.y * kCell; break;
        case Edge::South: y2 = (c.y + 1) * kCell; break;
        case Edge::West: x2 = c.x * kCell; break;
        case Edge::East: x2 = (c.x + 1) * kCell; break;
      }
      doc.line(cx, cy, x2, y2,
               std::string("class=\"port ") + (port.is_input ? "in" : "out") +
                   "\" stroke=\"#e63946\" stroke-width=\"1\"");
    }
    doc.close_group();
  }
  doc.close_group();

  // One polyline per net: an L-shaped route to each consumer, retracing to
  // the source between fan-out branches.
  std::map<std::string, std::vector<const WireSegment*>> by_net;
  for (const auto& w : result.wires) by_net[w.net].push_back(&w);
  doc.open_group("id=\"wires\" fill=\"none\" stroke=\"#457b9d\" stroke-width=\"0.8\"");
  for (const auto& [net, segments] : by_net) {
    std::vector<svg::Point> pts;
    for (std::size_t k = 0; k < segments.size(); ++k) {
      const auto a = center(segments[k]->from);
      const auto b = center(segments[k]->to);
      const svg::Point corner{b.first, a.second};
      if (pts.empty() || pts.back() != a) pts.push_back(a);
      pts.push_back(corner);
      pts.push_back(b);
      if (k + 1 < segments.size()) {
        pts.push_back(corner);
        pts.push_back(a);
      }
    }
    doc.polyline(pts, "class=\"wire\" data-net=\"" + svg::escape(net) + "\"");
  }
  doc.close_group();
  return doc.str();
}

nlohmann::json cost_to_json(const CostBreakdown& cost) {
  return {{"overlap", cost.overlap_cells},
          {"wire", cost.wire},
          {"area", cost.area},
          {"total", cost.total}};
}

nlohmann::json layout_to_json(const LayoutResult& result) {
  nlohmann::json placements = nlohmann::json::array();
  for (std::size_t i = 0; i < result.placement.size(); ++i) {
    const auto& p = result.placement[i];
    placements.push_back({{"id", i}, {"x", p.x}, {"y", p.y}, {"rot", p.rot}});
  }
  nlohmann::json wires = nlohmann::json::array();
  for (const auto& w : result.wires) {
    wires.push_back({{"net", w.net},
                     {"from", {w.from.x, w.from.y}},
                     {"to", {w.to.x, w.to.y}},
                     {"pad", w.from_pad}});
  }
  return {{"placements", placements},
          {"cost", cost_to_json(result.cost)},
          {"initial_cost", cost_to_json(result.initial_cost)},
          {"bbox", {{"x", result.bbox.x0}, {"y", result.bbox.y0},
                    {"w", result.bbox.width()}, {"h", result.bbox.height()}}},
          {"wires", wires},
          {"grid", result.grid_size},
          {"feasible", result.feasible},
          {"seed", result.seed}};
}

SAConfig sa_config_from_json(const nlohmann::json& j) {
  SAConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw Error(ErrorCode::BadRequest, "sa_config must be an object");
  try {
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("w_overlap")) c.weights.overlap = j["w_overlap"].get<double>();
    if (j.contains("w_wire")) c.weights.wire = j["w_wire"].get<double>();
    if (j.contains("w_area")) c.weights.area = j["w_area"].get<double>();
    if (j.contains("moves_per_epoch")) c.moves_per_epoch = j["moves_per_epoch"].get<int>();
    if (j.contains("cooling_alpha")) c.cooling_alpha = j["cooling_alpha"].get<double>();
    if (j.contains("initial_acceptance")) c.initial_acceptance = j["initial_acceptance"].get<double>();
    if (j.contains("min_temperature_ratio"))
      c.min_temperature_ratio = j["min_temperature_ratio"].get<double>();
    if (j.contains("stall_epochs")) c.stall_epochs = j["stall_epochs"].get<int>();
    if (j.contains("grid_size")) c.grid_size = j["grid_size"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("malformed sa_config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace fluidc
