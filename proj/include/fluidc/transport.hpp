#pragma once

// Chat-completion transports: a real HTTP client and an offline fixture
// replayer.

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace fluidc {

struct ToolCall {
  std::string id;
  std::string name;
  nlohmann::json arguments;  // parsed object
};

struct ChatMessage {
  std::string role;  // system | user | assistant | tool
  std::string content;
  std::vector<ToolCall> tool_calls;  // assistant only
  std::string tool_call_id;          // tool only
};

struct ChatRequest {
  std::string agent;  // fixture namespace; not sent on the wire
  std::string model;
  std::vector<ChatMessage> messages;
  nlohmann::json tools = nlohmann::json::array();
  std::optional<double> temperature;
};

struct ChatResponse {
  std::string content;
  std::vector<ToolCall> tool_calls;
};

/// Wire body in the chat-completions shape.
nlohmann::json request_to_json(const ChatRequest& request);
/// Accepts a full completion ({"choices":[{"message":...}]}) or a bare
/// message object. Unparseable tool arguments throw MalformedToolCall.
ChatResponse response_from_json(const nlohmann::json& j);
nlohmann::json message_to_json(const ChatMessage& m);

/// 64-bit FNV-1a of the canonical wire body, as 16 hex digits.
std::string request_hash(const ChatRequest& request);

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// Throws TransportError.
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

struct EndpointConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o";
  /// Name of the environment variable holding the bearer token; the value
  /// itself is never stored.
  std::string token_env = "OPENAI_API_KEY";
  std::optional<double> temperature;
  double timeout_s = 120.0;
};

EndpointConfig endpoint_config_from_json(const nlohmann::json& j);
nlohmann::json endpoint_config_to_json(const EndpointConfig& c);

class HttpTransport : public ChatTransport {
 public:
  explicit HttpTransport(EndpointConfig config);
  ChatResponse complete(const ChatRequest& request) override;
  const EndpointConfig& config() const { return config_; }

 private:
  EndpointConfig config_;
};

/// Replays responses from a fixture directory. A request is answered by
/// `<request_hash>.json` if present, otherwise by the next file in the
/// per-agent sequence `<agent>/001.json`, `<agent>/002.json`, ...
class MockTransport : public ChatTransport {
 public:
  explicit MockTransport(std::filesystem::path dir);
  ChatResponse complete(const ChatRequest& request) override;

  /// Requests received so far, in arrival order.
  std::vector<ChatRequest> requests() const;
  int calls(const std::string& agent) const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, int> counters_;
  std::vector<ChatRequest> log_;
};

}  // namespace fluidc
