#pragma once

// HTTP + WebSocket front end over Api and SessionManager.

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>

#include "fluidc/project.hpp"
#include "fluidc/sessions.hpp"

namespace fluidc {

struct ServerConfig {
  std::string host = "127.0.0.1";
  unsigned short port = 8080;  // 0 picks a free port
  std::filesystem::path projects_dir = "projects";
  int threads = 2;
  std::chrono::seconds session_ttl = std::chrono::minutes(30);
  std::chrono::milliseconds heartbeat = std::chrono::seconds(10);
  std::chrono::milliseconds sweep_interval = std::chrono::seconds(1);
};

class Server {
 public:
  explicit Server(ServerConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts the worker threads; returns the bound port.
  unsigned short start();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();
  void stop();

  unsigned short port() const;
  SessionManager& sessions();
  ProjectStore& projects();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace fluidc
