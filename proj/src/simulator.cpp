#include "fluidc/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "fluidc/error.hpp"

namespace fluidc {

namespace {

constexpr double kEps = 1e-9;

void sort_events(std::vector<StimulusEvent>& events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const StimulusEvent& a, const StimulusEvent& b) { return a.t < b.t; });
}

}  // namespace

double round_time(double t) { return std::round(t * 1e9) / 1e9; }

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorCode::InvalidConfig, "dt must be > 0");
  if (max_settle_iters && *max_settle_iters < 1)
    throw Error(ErrorCode::InvalidConfig, "max_settle_iters must be >= 1");
  if (!(time_scale > 0.0) || !std::isfinite(time_scale))
    throw Error(ErrorCode::InvalidConfig, "time_scale must be > 0");
  if (!(filter_tolerance > 0.0 && filter_tolerance < 1.0))
    throw Error(ErrorCode::InvalidConfig, "filter_tolerance must be in (0, 1)");
}

int SimConfig::settle_limit(std::size_t operator_count) const {
  if (max_settle_iters) return *max_settle_iters;
  return std::max(64, static_cast<int>(2 * operator_count));
}

// ---------------------------------------------------------------------------

int Trace::value_at(const std::string& net, double t) const {
  int v = 0;
  for (const auto& s : samples) {
    if (s.t > t + kEps) break;
    auto it = s.values.find(net);
    if (it != s.values.end()) v = it->second;
  }
  return v;
}

std::optional<double> Trace::first_change(const std::string& net, int value,
                                          double after) const {
  for (const auto& e : events) {
    if (e.net == net && e.new_value == value && e.t > after + kEps) return e.t;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

Simulator::Simulator(std::shared_ptr<const Netlist> netlist, SimConfig config)
    : netlist_(std::move(netlist)), config_(config) {
  init();
}

Simulator::Simulator(const Netlist& netlist, SimConfig config)
    : Simulator(std::make_shared<const Netlist>(netlist), config) {}

void Simulator::init() {
  config_.validate();
  if (has_errors(netlist_->diagnostics())) {
    std::string msg = "netlist has errors:";
    for (const auto& d : netlist_->diagnostics()) {
      if (d.severity == Severity::Error) msg += " " + d.message + ";";
    }
    throw Error(ErrorCode::InvalidNetlist, msg);
  }
  for (const auto& net : netlist_->nets()) {
    index_[net] = names_.size();
    names_.push_back(net);
    is_input_.push_back(netlist_->primary_inputs().count(net) > 0);
  }
  for (const auto& op : netlist_->operators()) {
    std::vector<std::size_t> in, out;
    for (const auto& n : op.inputs) in.push_back(index_.at(n));
    for (const auto& n : op.outputs) out.push_back(index_.at(n));
    op_in_.push_back(std::move(in));
    op_out_.push_back(std::move(out));
  }
  values_.assign(names_.size(), 0);
  ops_.assign(netlist_->operators().size(), OperatorState{});
  settle(0.0);
  reported_ = values_;
}

int Simulator::value(const std::string& net) const {
  auto it = index_.find(net);
  if (it == index_.end()) throw Error(ErrorCode::SpecNetUnknown, "unknown net '" + net + "'");
  return values_[it->second];
}

std::map<std::string, int> Simulator::values() const {
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < names_.size(); ++i) out[names_[i]] = values_[i];
  return out;
}

void Simulator::set_input(const std::string& net, int value) {
  auto it = index_.find(net);
  if (it == index_.end() || !is_input_[it->second])
    throw Error(ErrorCode::NotAnInput, "'" + net + "' is not a primary input");
  if (value != 0 && value != 1) throw Error(ErrorCode::BadRequest, "input value must be 0 or 1");
  values_[it->second] = static_cast<std::uint8_t>(value);
}

void Simulator::schedule(const StimulusEvent& event) {
  auto it = index_.find(event.net);
  if (it == index_.end() || !is_input_[it->second])
    throw Error(ErrorCode::NotAnInput, "'" + event.net + "' is not a primary input");
  if (event.v != 0 && event.v != 1) throw Error(ErrorCode::BadRequest, "event value must be 0 or 1");
  if (!(event.t >= 0.0)) throw Error(ErrorCode::BadRequest, "event time must be >= 0");
  pending_.push_back(event);
  sort_events(pending_);
}

std::vector<ChangeEvent> Simulator::step(double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidConfig, "step dt must be > 0");
  return advance_to(t_ + dt);
}

std::vector<ChangeEvent> Simulator::advance_to(double t) {
  const double t_new = round_time(t);
  if (t_new < t_ - kEps) throw Error(ErrorCode::InvalidConfig, "cannot step backwards in time");
  const double dt = std::max(0.0, t_new - t_);

  // 1. due input events
  std::size_t applied = 0;
  while (applied < pending_.size() && pending_[applied].t <= t_new + kEps) {
    const auto& e = pending_[applied];
    values_[index_.at(e.net)] = static_cast<std::uint8_t>(e.v);
    ++applied;
  }
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(applied));

  // 2. timed state
  if (dt > 0.0) {
    for (std::size_t i = 0; i < ops_.size(); ++i) {
      auto& st = ops_[i];
      switch (netlist_->operators()[i].kind) {
        case OperatorKind::Timer:
          if (st.running) st.elapsed += dt;
          break;
        case OperatorKind::EdgeDetector:
          st.pulse_remaining = std::max(0.0, st.pulse_remaining - dt);
          break;
        default:
          break;
      }
    }
  }
  t_ = t_new;

  // 3. settle
  settle(t_new);

  // 4. changes
  return collect_changes(t_new);
}

void Simulator::evaluate(const std::vector<std::uint8_t>& v, double t_new,
                         std::vector<std::uint8_t>& next) const {
  // Driven nets are rebuilt as the OR of their drivers (wired-OR through
  // forward diodes; single drivers reduce to plain assignment).
  for (std::size_t n = 0; n < next.size(); ++n) {
    if (!is_input_[n]) next[n] = 0;
  }
  const auto& ops = netlist_->operators();
  const double scale = config_.time_scale;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const auto& op = ops[i];
    const auto& st = ops_[i];
    const auto& in = op_in_[i];
    const auto& out = op_out_[i];
    auto drive = [&](std::size_t port, bool bit) {
      if (bit) next[out[port]] = 1;
    };
    const bool a = v[in[0]] != 0;
    const bool b = in.size() > 1 && v[in[1]] != 0;
    switch (op.kind) {
      case OperatorKind::Not: drive(0, !a); break;
      case OperatorKind::And: drive(0, a && b); break;
      case OperatorKind::Or: drive(0, a || b); break;
      case OperatorKind::Nor: drive(0, !(a || b)); break;
      case OperatorKind::Nand: drive(0, !(a && b)); break;
      case OperatorKind::Xor: drive(0, a != b); break;
      case OperatorKind::Diode:
        drive(0, op.direction == DiodeDirection::Forward && a);
        break;
      case OperatorKind::Timer: {
        const double threshold = op.params[0] * scale;
        drive(0, a && st.running && st.elapsed >= threshold - kEps);
        break;
      }
      case OperatorKind::EdgeDetector:
        drive(0, (a && !st.last_input) || st.pulse_remaining > kEps);
        break;
      case OperatorKind::Filter: {
        std::vector<double> edges(st.rising_edges.begin(), st.rising_edges.end());
        if (a && !st.last_input) edges.push_back(t_new);
        bool locked = false;
        if (edges.size() >= 3) {
          const double f = op.params[0] / scale;
          const double newest = edges[edges.size() - 1];
          const double third = edges[edges.size() - 3];
          if (newest - third > kEps) {
            const double measured = 2.0 / (newest - third);
            locked = std::abs(measured - f) <= config_.filter_tolerance * f + kEps &&
                     t_new - newest <= 1.5 / f + kEps;
          }
        }
        drive(0, locked);
        break;
      }
      case OperatorKind::Register: {
        const bool q = b ? st.stored : a;  // inputs are (D, E)
        drive(0, q);
        drive(1, !q);
        break;
      }
      case OperatorKind::Multiplexer: {
        const std::size_t sel = (v[in[4]] ? 2u : 0u) + (v[in[5]] ? 1u : 0u);
        drive(0, v[in[sel]] != 0);
        break;
      }
      case OperatorKind::Demultiplexer: {
        const std::size_t sel = (v[in[1]] ? 2u : 0u) + (v[in[2]] ? 1u : 0u);
        drive(sel, a);
        break;
      }
    }
  }
}

void Simulator::settle(double t_new) {
  const int limit = config_.settle_limit(ops_.size());
  std::vector<std::uint8_t> next(values_.size());
  bool converged = false;
  for (int iter = 0; iter < limit; ++iter) {
    next = values_;
    evaluate(values_, t_new, next);
    if (next == values_) {
      converged = true;
      break;
    }
    values_.swap(next);
  }
  if (!converged) {
    next = values_;
    evaluate(values_, t_new, next);
    if (next != values_) {
      std::string nets;
      for (std::size_t n = 0; n < next.size(); ++n) {
        if (next[n] != values_[n]) nets += (nets.empty() ? "" : ", ") + names_[n];
      }
      throw Error(ErrorCode::OscillationError,
                  "settle did not converge after " + std::to_string(limit) +
                      " iterations; still changing: " + nets);
    }
  }

  // Latch post-settle operator state.
  const auto& ops = netlist_->operators();
  for (std::size_t i = 0; i < ops.size(); ++i) {
    auto& st = ops_[i];
    const bool a = values_[op_in_[i][0]] != 0;
    switch (ops[i].kind) {
      case OperatorKind::Timer:
        if (!a) {
          st.running = false;
          st.elapsed = 0.0;
        } else if (!st.running) {
          st.running = true;
          st.elapsed = 0.0;
        }
        break;
      case OperatorKind::EdgeDetector:
        if (a && !st.last_input) st.pulse_remaining = ops[i].params[0] * config_.time_scale;
        st.last_input = a;
        break;
      case OperatorKind::Filter:
        if (a && !st.last_input) {
          st.rising_edges.push_back(t_new);
          while (st.rising_edges.size() > 3) st.rising_edges.pop_front();
        }
        st.last_input = a;
        break;
      case OperatorKind::Register:
        st.stored = values_[op_out_[i][0]] != 0;
        break;
      default:
        break;
    }
  }
}

std::vector<ChangeEvent> Simulator::collect_changes(double t) {
  std::vector<ChangeEvent> out;
  for (std::size_t n = 0; n < values_.size(); ++n) {
    if (values_[n] != reported_[n]) out.push_back({t, names_[n], reported_[n], values_[n]});
  }
  reported_ = values_;
  return out;
}

SimState Simulator::snapshot() const {
  SimState s;
  s.t = t_;
  s.net_values = values();
  s.op_state = ops_;
  s.pending_events = pending_;
  return s;
}

// ---------------------------------------------------------------------------

Simulator init_session(const Netlist& netlist, const SimConfig& config) {
  return Simulator(netlist, config);
}

Trace run(const Netlist& netlist, const Stimulus& stimulus, double until,
          const SimConfig& config) {
  if (!(until > 0.0)) throw Error(ErrorCode::InvalidConfig, "run horizon must be > 0");
  Simulator sim(netlist, config);
  for (const auto& e : stimulus) sim.schedule(e);

  Trace trace;
  auto record = [&](std::vector<ChangeEvent> events) {
    trace.samples.push_back({sim.time(), sim.values()});
    for (auto& e : events) trace.events.push_back(std::move(e));
  };
  double t = 0.0;
  try {
    record(sim.advance_to(0.0));
    const auto ticks = static_cast<long long>(std::ceil(until / config.dt - 1e-9));
    for (long long k = 1; k <= ticks; ++k) {
      t = round_time(static_cast<double>(k) * config.dt);
      record(sim.advance_to(t));
    }
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " (t=" + format_number(t) + ")");
  }
  return trace;
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json stimulus_to_json(const Stimulus& s) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : s) arr.push_back({{"t", e.t}, {"net", e.net}, {"v", e.v}});
  return arr;
}

Stimulus stimulus_from_json(const nlohmann::json& j) {
  const nlohmann::json& arr = j.is_object() && j.contains("stimulus") ? j["stimulus"] : j;
  if (!arr.is_array()) throw Error(ErrorCode::BadRequest, "stimulus must be an array");
  Stimulus s;
  try {
    for (const auto& e : arr) {
      s.push_back({e.at("t").get<double>(), e.at("net").get<std::string>(), e.at("v").get<int>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("malformed stimulus: ") + e.what());
  }
  sort_events(s);
  return s;
}

nlohmann::json change_event_to_json(const ChangeEvent& e) {
  return {{"t", e.t}, {"net", e.net}, {"old", e.old_value}, {"new", e.new_value}};
}

nlohmann::json trace_to_json(const Trace& trace) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : trace.samples) samples.push_back({{"t", s.t}, {"values", s.values}});
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : trace.events) events.push_back(change_event_to_json(e));
  return {{"samples", samples}, {"events", events}};
}

nlohmann::json sim_config_to_json(const SimConfig& c) {
  nlohmann::json j{{"dt", c.dt}, {"time_scale", c.time_scale}, {"filter_tolerance", c.filter_tolerance}};
  if (c.max_settle_iters) j["max_settle_iters"] = *c.max_settle_iters;
  return j;
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
  SimConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw Error(ErrorCode::BadRequest, "sim_config must be an object");
  try {
    if (j.contains("dt")) c.dt = j["dt"].get<double>();
    if (j.contains("time_scale")) c.time_scale = j["time_scale"].get<double>();
    if (j.contains("filter_tolerance")) c.filter_tolerance = j["filter_tolerance"].get<double>();
    if (j.contains("max_settle_iters")) c.max_settle_iters = j["max_settle_iters"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadRequest, std::string("malformed sim_config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json sim_state_to_json(const Simulator& sim) {
  nlohmann::json ops = nlohmann::json::array();
  const auto& states = sim.operator_states();
  for (const auto& op : sim.netlist().operators()) {
    const auto& st = states[op.id];
    nlohmann::json j{{"id", op.id}, {"kind", kind_name(op.kind)}};
    switch (op.kind) {
      case OperatorKind::Timer:
        j["elapsed"] = round_time(st.elapsed);
        j["threshold"] = op.params[0] * sim.config().time_scale;
        break;
      case OperatorKind::EdgeDetector:
        j["pulse_remaining"] = round_time(st.pulse_remaining);
        break;
      case OperatorKind::Filter:
        j["rising_edges"] = std::vector<double>(st.rising_edges.begin(), st.rising_edges.end());
        break;
      case OperatorKind::Register:
        j["stored"] = st.stored ? 1 : 0;
        break;
      default:
        continue;
    }
    ops.push_back(std::move(j));
  }
  return {{"t", sim.time()}, {"values", sim.values()}, {"operators", ops}};
}

}  // namespace fluidc
