#include "fluidc/transport.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fluidc/error.hpp"
#include "httplib.h"

namespace fluidc {

using nlohmann::json;

json message_to_json(const ChatMessage& m) {
  json j = {{"role", m.role}, {"content", m.content}};
  if (!m.tool_calls.empty()) {
    json calls = json::array();
    for (const auto& c : m.tool_calls) {
      calls.push_back({{"id", c.id},
                       {"type", "function"},
                       {"function", {{"name", c.name}, {"arguments", c.arguments.dump()}}}});
    }
    j["tool_calls"] = calls;
  }
  if (!m.tool_call_id.empty()) j["tool_call_id"] = m.tool_call_id;
  return j;
}

json request_to_json(const ChatRequest& r) {
  json messages = json::array();
  for (const auto& m : r.messages) messages.push_back(message_to_json(m));
  json j = {{"model", r.model}, {"messages", messages}};
  if (!r.tools.empty()) j["tools"] = r.tools;
  if (r.temperature) j["temperature"] = *r.temperature;
  return j;
}

ChatResponse response_from_json(const json& body) {
  const json* msg = &body;
  if (body.contains("choices")) {
    const auto& choices = body["choices"];
    if (!choices.is_array() || choices.empty() || !choices[0].contains("message"))
      throw Error(ErrorCode::TransportError, "completion has no message");
    msg = &choices[0]["message"];
  } else if (body.contains("message")) {
    msg = &body["message"];
  }
  if (!msg->is_object()) throw Error(ErrorCode::TransportError, "completion message is not an object");
  ChatResponse r;
  if (msg->contains("content") && (*msg)["content"].is_string())
    r.content = (*msg)["content"].get<std::string>();
  if (msg->contains("tool_calls") && (*msg)["tool_calls"].is_array()) {
    int n = 0;
    for (const auto& c : (*msg)["tool_calls"]) {
      ToolCall call;
      call.id = c.value("id", "call_" + std::to_string(n));
      const json& fn = c.contains("function") ? c["function"] : c;
      if (!fn.contains("name") || !fn["name"].is_string())
        throw Error(ErrorCode::MalformedToolCall, "tool call without a name");
      call.name = fn["name"].get<std::string>();
      const json args = fn.value("arguments", json::object());
      if (args.is_string()) {
        const auto text = args.get<std::string>();
        try {
          call.arguments = text.empty() ? json::object() : json::parse(text);
        } catch (const json::parse_error&) {
          throw Error(ErrorCode::MalformedToolCall,
                      "arguments of " + call.name + " are not valid JSON");
        }
      } else {
        call.arguments = args;
      }
      if (!call.arguments.is_object())
        throw Error(ErrorCode::MalformedToolCall, "arguments of " + call.name + " must be an object");
      r.tool_calls.push_back(std::move(call));
      ++n;
    }
  }
  return r;
}

std::string request_hash(const ChatRequest& request) {
  const std::string text = request_to_json(request).dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

EndpointConfig endpoint_config_from_json(const json& j) {
  EndpointConfig c;
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "endpoint config must be an object");
  try {
    c.base_url = j.value("base_url", c.base_url);
    c.model = j.value("model", c.model);
    c.token_env = j.value("token_env", c.token_env);
    if (j.contains("temperature") && !j["temperature"].is_null())
      c.temperature = j["temperature"].get<double>();
    c.timeout_s = j.value("timeout_s", c.timeout_s);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad endpoint config: ") + e.what());
  }
  if (c.timeout_s <= 0) throw Error(ErrorCode::InvalidConfig, "timeout_s must be positive");
  if (c.base_url.find("://") == std::string::npos)
    throw Error(ErrorCode::InvalidConfig, "base_url needs a scheme");
  return c;
}

json endpoint_config_to_json(const EndpointConfig& c) {
  json j = {{"base_url", c.base_url},
            {"model", c.model},
            {"token_env", c.token_env},
            {"timeout_s", c.timeout_s}};
  if (c.temperature) j["temperature"] = *c.temperature;
  return j;
}

// ---------------------------------------------------------------------------

HttpTransport::HttpTransport(EndpointConfig config) : config_(std::move(config)) {}

ChatResponse HttpTransport::complete(const ChatRequest& request) {
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::InvalidConfig, "base_url needs a scheme");
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  const std::string host = config_.base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  const char* token = std::getenv(config_.token_env.c_str());
  if (token == nullptr || *token == '\0')
    throw Error(ErrorCode::TransportError,
                "environment variable " + config_.token_env + " is not set");

  httplib::Client client(host);
  const auto secs = static_cast<time_t>(config_.timeout_s);
  const auto usecs = static_cast<time_t>((config_.timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  client.set_bearer_token_auth(token);

  ChatRequest wire = request;
  if (wire.model.empty()) wire.model = config_.model;
  if (!wire.temperature) wire.temperature = config_.temperature;
  const auto result =
      client.Post(prefix + "/chat/completions", request_to_json(wire).dump(), "application/json");
  if (!result)
    throw Error(ErrorCode::TransportError,
                "request to " + host + " failed: " + httplib::to_string(result.error()));
  if (result->status != 200)
    throw Error(ErrorCode::TransportError,
                "endpoint answered HTTP " + std::to_string(result->status));
  try {
    return response_from_json(json::parse(result->body));
  } catch (const json::parse_error&) {
    throw Error(ErrorCode::TransportError, "endpoint answered with non-JSON body");
  }
}

// ---------------------------------------------------------------------------

MockTransport::MockTransport(std::filesystem::path dir) : dir_(std::move(dir)) {
  if (!std::filesystem::is_directory(dir_))
    throw Error(ErrorCode::TransportError, "fixture directory " + dir_.string() + " not found");
}

ChatResponse MockTransport::complete(const ChatRequest& request) {
  std::filesystem::path file = dir_ / (request_hash(request) + ".json");
  {
    std::lock_guard lock(mutex_);
    log_.push_back(request);
    if (!std::filesystem::exists(file)) {
      const int n = ++counters_[request.agent];
      char seq[24];
      std::snprintf(seq, sizeof seq, "%03d.json", n);
      file = dir_ / request.agent / seq;
    }
  }
  std::ifstream in(file, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::TransportError,
                "no fixture for " + request.agent + " request " + request_hash(request));
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return response_from_json(json::parse(ss.str()));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::TransportError, "fixture " + file.string() + " is not JSON");
  }
}

std::vector<ChatRequest> MockTransport::requests() const {
  std::lock_guard lock(mutex_);
  return log_;
}

int MockTransport::calls(const std::string& agent) const {
  std::lock_guard lock(mutex_);
  return static_cast<int>(
      std::count_if(log_.begin(), log_.end(), [&](const ChatRequest& r) { return r.agent == agent; }));
}

}  // namespace fluidc
