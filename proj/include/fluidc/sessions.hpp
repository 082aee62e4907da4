#pragma once

// Live simulation sessions shared by the HTTP and WebSocket front ends.

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "fluidc/fchdl.hpp"
#include "fluidc/simulator.hpp"
#include "json.hpp"

namespace fluidc {

/// Close code sent to subscribers when a session expires or is deleted.
inline constexpr int kSessionClosedCode = 4000;

struct Subscriber {
  std::function<void(const nlohmann::json& frame)> send;
  std::function<void(int code, const std::string& reason)> close;
};

/// All mutations and frame broadcasts happen under one per-session lock, so
/// every subscriber sees changes in the order they were applied.
class Session {
 public:
  using Clock = std::chrono::steady_clock;

  Session(std::string id, std::shared_ptr<const Netlist> netlist, SimConfig config, bool autorun);

  const std::string& id() const { return id_; }
  bool autorun() const { return autorun_; }
  double dt() const { return config_.dt; }
  const Netlist& netlist() const { return *netlist_; }

  nlohmann::json state();
  /// {"state", "events"}; throws NotAnInput / BadRequest.
  nlohmann::json set_input(const std::string& net, int v);
  nlohmann::json step(double dt);

  /// Sends the snapshot frame to `s` before any later event frame.
  int subscribe(Subscriber s);
  void unsubscribe(int token);
  std::size_t subscribers();
  void broadcast(const nlohmann::json& frame);
  void close_all(int code, const std::string& reason);

  void touch();
  Clock::time_point last_touched();

 private:
  nlohmann::json state_locked() const;
  nlohmann::json publish_locked(const std::vector<ChangeEvent>& events);

  std::string id_;
  std::shared_ptr<const Netlist> netlist_;
  SimConfig config_;
  bool autorun_;
  Simulator sim_;
  std::mutex mutex_;
  std::map<int, Subscriber> subscribers_;
  int next_token_ = 0;
  Clock::time_point touched_;
};

nlohmann::json event_frame(const ChangeEvent& e);

class SessionManager {
 public:
  explicit SessionManager(std::chrono::seconds ttl = std::chrono::minutes(30));

  /// Throws InvalidNetlist when the netlist has error diagnostics.
  std::shared_ptr<Session> create(const Netlist& netlist, const SimConfig& config, bool autorun);
  /// Throws NotFound; refreshes the idle timer.
  std::shared_ptr<Session> get(const std::string& id);
  bool remove(const std::string& id);
  /// Drops sessions idle longer than the TTL, closing their subscribers.
  std::vector<std::string> expire(Session::Clock::time_point now = Session::Clock::now());
  std::vector<std::shared_ptr<Session>> all();
  std::size_t size();

  std::chrono::seconds ttl() const { return ttl_; }
  void set_ttl(std::chrono::seconds ttl) { ttl_ = ttl; }

 private:
  std::chrono::seconds ttl_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace fluidc
