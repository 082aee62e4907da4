#include "fluidc/sessions.hpp"

#include <cstdio>
#include <random>

#include "fluidc/error.hpp"

namespace fluidc {

using nlohmann::json;

namespace {

std::string new_id() {
  static std::mutex m;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(m);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

}  // namespace

json event_frame(const ChangeEvent& e) {
  return {{"type", "event"}, {"t", e.t}, {"net", e.net}, {"v", e.new_value}};
}

Session::Session(std::string id, std::shared_ptr<const Netlist> netlist, SimConfig config,
                 bool autorun)
    : id_(std::move(id)),
      netlist_(std::move(netlist)),
      config_(config),
      autorun_(autorun),
      sim_(netlist_, config_),
      touched_(Clock::now()) {
  sim_.settle_now();
}

json Session::state_locked() const {
  json s = sim_state_to_json(sim_);
  s["id"] = id_;
  return s;
}

json Session::publish_locked(const std::vector<ChangeEvent>& events) {
  json arr = json::array();
  for (const auto& e : events) {
    arr.push_back(change_event_to_json(e));
    const json frame = event_frame(e);
    for (auto& [token, sub] : subscribers_) {
      if (sub.send) sub.send(frame);
    }
  }
  return {{"state", state_locked()}, {"events", arr}};
}

json Session::state() {
  std::lock_guard lock(mutex_);
  touched_ = Clock::now();
  return state_locked();
}

json Session::set_input(const std::string& net, int v) {
  if (v != 0 && v != 1) throw Error(ErrorCode::BadRequest, "input value must be 0 or 1");
  std::lock_guard lock(mutex_);
  touched_ = Clock::now();
  sim_.set_input(net, v);
  return publish_locked(sim_.settle_now());
}

json Session::step(double dt) {
  if (!(dt > 0.0)) throw Error(ErrorCode::BadRequest, "dt must be positive");
  std::lock_guard lock(mutex_);
  touched_ = Clock::now();
  return publish_locked(sim_.step(dt));
}

int Session::subscribe(Subscriber s) {
  std::lock_guard lock(mutex_);
  touched_ = Clock::now();
  if (s.send) s.send({{"type", "snapshot"}, {"state", state_locked()}});
  const int token = next_token_++;
  subscribers_.emplace(token, std::move(s));
  return token;
}

void Session::unsubscribe(int token) {
  std::lock_guard lock(mutex_);
  subscribers_.erase(token);
}

std::size_t Session::subscribers() {
  std::lock_guard lock(mutex_);
  return subscribers_.size();
}

void Session::broadcast(const json& frame) {
  std::lock_guard lock(mutex_);
  for (auto& [token, sub] : subscribers_) {
    if (sub.send) sub.send(frame);
  }
}

void Session::close_all(int code, const std::string& reason) {
  std::map<int, Subscriber> subs;
  {
    std::lock_guard lock(mutex_);
    subs.swap(subscribers_);
  }
  for (auto& [token, sub] : subs) {
    if (sub.close) sub.close(code, reason);
  }
}

void Session::touch() {
  std::lock_guard lock(mutex_);
  touched_ = Clock::now();
}

Session::Clock::time_point Session::last_touched() {
  std::lock_guard lock(mutex_);
  return touched_;
}

// ---------------------------------------------------------------------------

SessionManager::SessionManager(std::chrono::seconds ttl) : ttl_(ttl) {}

std::shared_ptr<Session> SessionManager::create(const Netlist& netlist, const SimConfig& config,
                                                bool autorun) {
  config.validate();
  if (has_errors(netlist.diagnostics()))
    throw Error(ErrorCode::InvalidNetlist, "netlist has validation errors");
  auto shared = std::make_shared<const Netlist>(netlist);
  auto session = std::make_shared<Session>(new_id(), shared, config, autorun);
  std::lock_guard lock(mutex_);
  sessions_.emplace(session->id(), session);
  return session;
}

std::shared_ptr<Session> SessionManager::get(const std::string& id) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::NotFound, "no session '" + id + "'");
    s = it->second;
  }
  s->touch();
  return s;
}

bool SessionManager::remove(const std::string& id) {
  std::shared_ptr<Session> s;
  {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) return false;
    s = it->second;
    sessions_.erase(it);
  }
  s->close_all(kSessionClosedCode, "session closed");
  return true;
}

std::vector<std::string> SessionManager::expire(Session::Clock::time_point now) {
  std::vector<std::shared_ptr<Session>> dropped;
  {
    std::lock_guard lock(mutex_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      if (now - it->second->last_touched() > ttl_) {
        dropped.push_back(it->second);
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }
  std::vector<std::string> ids;
  for (auto& s : dropped) {
    s->close_all(kSessionClosedCode, "session expired");
    ids.push_back(s->id());
  }
  return ids;
}

std::vector<std::shared_ptr<Session>> SessionManager::all() {
  std::lock_guard lock(mutex_);
  std::vector<std::shared_ptr<Session>> out;
  for (auto& [id, s] : sessions_) out.push_back(s);
  return out;
}

std::size_t SessionManager::size() {
  std::lock_guard lock(mutex_);
  return sessions_.size();
}

}  // namespace fluidc
