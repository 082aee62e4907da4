#pragma once

// Transport-independent request dispatch for the service. The network layer
// only moves bytes in and out of Api::handle.

#include <string>

#include "fluidc/error.hpp"
#include "fluidc/project.hpp"
#include "fluidc/sessions.hpp"
#include "json.hpp"

namespace fluidc {

struct ApiRequest {
  std::string method;  // "GET", "POST", ...
  std::string path;    // without query string
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

int http_status(ErrorCode code);
/// {"code", "message", "detail"} body for a failure.
ApiResponse error_response(const Error& e);
ApiResponse error_response(int status, std::string_view code, const std::string& message);

// Response bodies shared by the service and the CLI.
nlohmann::json compile_document(std::string_view circuit);
/// Reads "netlist" (object or FC-HDL string) or "circuit" from a request body.
Netlist netlist_from_request(const nlohmann::json& body);
/// {"netlist"|"circuit", "spec"?, "temporal"?, "sim_config"?} -> report.
nlohmann::json verify_document(const nlohmann::json& body);
/// {"netlist"|"circuit", "sa_config"?, "restarts"?, "svg"?} -> layout.
nlohmann::json layout_document(const nlohmann::json& body);
/// Shape request -> dimensions plus "svg".
nlohmann::json pattern_document(const nlohmann::json& body);
/// Runs the pipeline on `files` with a mock or HTTP transport chosen from the
/// config; returns {project, written, <doc stem>...}.
nlohmann::json design_document(ProjectFiles& files, const nlohmann::json& pipeline_config,
                               const std::string& project);

class Api {
 public:
  Api(SessionManager& sessions, ProjectStore& projects);

  ApiResponse handle(const ApiRequest& request);

 private:
  ApiResponse dispatch(const ApiRequest& request);

  SessionManager& sessions_;
  ProjectStore& projects_;
};

}  // namespace fluidc
