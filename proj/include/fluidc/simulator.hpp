#pragma once

// Discrete-time simulation of a netlist under binary pneumatic semantics:
// positive pressure is 1, atmospheric pressure is 0, every net starts at 0.
//
// A tick of length dt runs in four phases:
//   1. apply queued input events due at or before the new time;
//   2. advance timed operator state (Timer elapsed, EdgeDetector pulse);
//   3. settle: recompute every operator from the previous iteration's net
//      values (synchronous/Jacobi) until nothing changes;
//   4. report net changes.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fluidc/fchdl.hpp"
#include "json.hpp"

namespace fluidc {

struct SimConfig {
  double dt = 0.1;
  /// Unset means 2 x operator count with a floor of 64.
  std::optional<int> max_settle_iters;
  double time_scale = 1.0;
  double filter_tolerance = 0.20;

  void validate() const;
  int settle_limit(std::size_t operator_count) const;
};

struct StimulusEvent {
  double t = 0.0;
  std::string net;
  int v = 0;
};

using Stimulus = std::vector<StimulusEvent>;

struct ChangeEvent {
  double t = 0.0;
  std::string net;
  int old_value = 0;
  int new_value = 0;

  bool operator==(const ChangeEvent&) const = default;
};

/// Per-operator internal state; only the fields relevant to the kind are used.
struct OperatorState {
  double elapsed = 0.0;           // Timer
  bool running = false;           // Timer: input has been 1 since `elapsed` began
  double pulse_remaining = 0.0;   // EdgeDetector
  bool last_input = false;        // EdgeDetector, Filter
  std::deque<double> rising_edges;  // Filter, newest last, at most 3
  bool stored = false;            // Register

  bool operator==(const OperatorState&) const = default;
};

struct SimState {
  double t = 0.0;
  std::map<std::string, int> net_values;
  std::vector<OperatorState> op_state;
  std::vector<StimulusEvent> pending_events;
};

struct TraceSample {
  double t = 0.0;
  std::map<std::string, int> values;

  bool operator==(const TraceSample&) const = default;
};

struct Trace {
  std::vector<TraceSample> samples;
  std::vector<ChangeEvent> events;

  /// Value of `net` in the last sample at or before `t`.
  int value_at(const std::string& net, double t) const;
  /// Time of the first change of `net` to `value` strictly after `after`.
  std::optional<double> first_change(const std::string& net, int value,
                                     double after = -1.0) const;

  bool operator==(const Trace&) const = default;
};

/// One live simulation over a shared, immutable netlist.
class Simulator {
 public:
  Simulator(std::shared_ptr<const Netlist> netlist, SimConfig config = {});
  Simulator(const Netlist& netlist, SimConfig config = {});

  const Netlist& netlist() const { return *netlist_; }
  const SimConfig& config() const { return config_; }
  double time() const { return t_; }

  int value(const std::string& net) const;
  std::map<std::string, int> values() const;
  const std::vector<OperatorState>& operator_states() const { return ops_; }

  /// Changes a primary input at the current time; the next settle sees it.
  void set_input(const std::string& net, int value);
  /// Queues a future input change.
  void schedule(const StimulusEvent& event);

  /// Advances by dt (> 0) and returns the changes observed in this tick.
  std::vector<ChangeEvent> step(double dt);
  /// Advances to absolute time t (>= current time); t == time() settles in place.
  std::vector<ChangeEvent> advance_to(double t);
  std::vector<ChangeEvent> settle_now() { return advance_to(t_); }

  SimState snapshot() const;

 private:
  void init();
  void settle(double t_new);
  void evaluate(const std::vector<std::uint8_t>& v, double t_new,
                std::vector<std::uint8_t>& next) const;
  std::vector<ChangeEvent> collect_changes(double t);

  std::shared_ptr<const Netlist> netlist_;
  SimConfig config_;
  double t_ = 0.0;
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
  std::vector<bool> is_input_;
  std::vector<std::vector<std::size_t>> op_in_, op_out_;
  std::vector<std::uint8_t> values_;
  std::vector<std::uint8_t> reported_;
  std::vector<OperatorState> ops_;
  std::vector<StimulusEvent> pending_;  // sorted by time, stable
};

/// Fresh simulator at t = 0 with all nets 0 and one settle pass applied.
/// Throws InvalidNetlist when the netlist has error diagnostics.
Simulator init_session(const Netlist& netlist, const SimConfig& config = {});

/// Batch run: one sample at t = 0 and one per tick up to `until`.
Trace run(const Netlist& netlist, const Stimulus& stimulus, double until,
          const SimConfig& config = {});

/// Rounds a time to the nanosecond grid used for all reported times.
double round_time(double t);

nlohmann::json stimulus_to_json(const Stimulus& s);
Stimulus stimulus_from_json(const nlohmann::json& j);
nlohmann::json trace_to_json(const Trace& trace);
nlohmann::json change_event_to_json(const ChangeEvent& e);
nlohmann::json sim_config_to_json(const SimConfig& c);
SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json sim_state_to_json(const Simulator& sim);

}  // namespace fluidc
