#include "fluidc/api.hpp"

#include <regex>

#include "fluidc/agents.hpp"
#include "fluidc/layout.hpp"
#include "fluidc/patterns.hpp"
#include "fluidc/verifier.hpp"

namespace fluidc {

using nlohmann::json;

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadRequest:
    case ErrorCode::InvalidConfig:
      return 400;
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::Conflict:
    case ErrorCode::MissingDocument:
      return 409;
    case ErrorCode::IoError:
      return 500;
    default:
      return 422;
  }
}

ApiResponse error_response(int status, std::string_view code, const std::string& message) {
  json body = {{"code", code}, {"message", message}, {"detail", json::object()}};
  return {status, body.dump(), "application/json"};
}

ApiResponse error_response(const Error& e) {
  json detail = json::object();
  if (e.offset()) detail["offset"] = *e.offset();
  json body = {{"code", to_string(e.code())}, {"message", e.what()}, {"detail", detail}};
  return {http_status(e.code()), body.dump(), "application/json"};
}

json compile_document(std::string_view circuit) {
  const Netlist n = parse_circuit(circuit);
  return {{"netlist", netlist_to_json(n)}, {"diagnostics", diagnostics_to_json(n.diagnostics())}};
}

Netlist netlist_from_request(const json& body) {
  if (!body.is_object()) throw Error(ErrorCode::BadRequest, "request body must be an object");
  if (body.contains("netlist")) {
    const auto& n = body["netlist"];
    if (n.is_string()) return load_netlist(n.get<std::string>());
    if (n.is_object()) return netlist_from_json(n);
    throw Error(ErrorCode::BadRequest, "'netlist' must be an object or FC-HDL text");
  }
  if (body.contains("circuit") && body["circuit"].is_string())
    return parse_circuit(body["circuit"].get<std::string>());
  throw Error(ErrorCode::BadRequest, "missing 'netlist' or 'circuit'");
}

json verify_document(const json& body) {
  if (!body.is_object()) throw Error(ErrorCode::BadRequest, "request body must be an object");
  const SimConfig config =
      body.contains("sim_config") ? sim_config_from_json(body["sim_config"]) : SimConfig{};
  std::optional<TruthTableSpec> spec;
  if (body.contains("spec") && !body["spec"].is_null()) {
    const auto& s = body["spec"];
    if (s.is_string()) {
      spec = parse_truth_table_text(s.get<std::string>());
      if (!spec) throw Error(ErrorCode::BadRequest, "truth table text could not be read");
    } else {
      spec = truth_table_from_json(s);
    }
  }
  InspectionReport report;
  std::optional<Netlist> netlist;
  if (!body.contains("netlist") && body.contains("circuit") && body["circuit"].is_string()) {
    const std::string text = body["circuit"].get<std::string>();
    report = inspect_circuit(text, spec, config);
    try {
      netlist = parse_circuit(text);
    } catch (const Error&) {
    }
  } else {
    netlist = netlist_from_request(body);
    report = inspect(*netlist, spec, config);
  }
  json out = report_to_json(report);
  if (body.contains("temporal") && !body["temporal"].is_null() && netlist) {
    const auto findings = check_temporal(*netlist, temporal_from_json(body["temporal"]), config);
    out["temporal"] = findings_to_json(findings);
    if (!findings.empty()) out["pass"] = false;
  }
  return out;
}

json layout_document(const json& body) {
  const Netlist netlist = netlist_from_request(body);
  const SAConfig config =
      body.contains("sa_config") ? sa_config_from_json(body["sa_config"]) : SAConfig{};
  const int restarts = body.value("restarts", 1);
  if (restarts < 1 || restarts > 64) throw Error(ErrorCode::BadRequest, "restarts must be 1-64");
  const LayoutResult result = place_best_of(netlist, config, restarts);
  json out = layout_to_json(result);
  if (body.value("svg", false)) out["svg"] = export_layout_svg(result, netlist);
  return out;
}

json pattern_document(const json& body) {
  const PatternResult p = calc_pattern(shape_request_from_json(body));
  json out = pattern_to_json(p);
  out["svg"] = pattern_svg(p);
  return out;
}

// ---------------------------------------------------------------------------

Api::Api(SessionManager& sessions, ProjectStore& projects)
    : sessions_(sessions), projects_(projects) {}

ApiResponse Api::handle(const ApiRequest& request) {
  try {
    return dispatch(request);
  } catch (const Error& e) {
    return error_response(e);
  } catch (const json::exception& e) {
    return error_response(400, "BadRequest", std::string("malformed request: ") + e.what());
  } catch (const std::exception& e) {
    return error_response(500, "Internal", e.what());
  }
}

namespace {

json parse_body(const ApiRequest& r) {
  if (r.body.empty()) return json::object();
  try {
    return json::parse(r.body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadRequest, std::string("body is not valid JSON: ") + e.what());
  }
}

ApiResponse ok(const json& body, int status = 200) { return {status, body.dump(), "application/json"}; }

std::unique_ptr<ChatTransport> transport_for(const PipelineConfig& c) {
  if (c.mock_dir) return std::make_unique<MockTransport>(*c.mock_dir);
  if (c.endpoint) return std::make_unique<HttpTransport>(*c.endpoint);
  throw Error(ErrorCode::BadRequest, "pipeline_config needs 'mock_dir' or 'endpoint'");
}

}  // namespace

json design_document(ProjectFiles& files, const json& pipeline_config, const std::string& project) {
  const PipelineConfig config = pipeline_config_from_json(pipeline_config);
  auto transport = transport_for(config);
  const PipelineResult result = run_design_pipeline(files, *transport, config);
  json out = {{"project", project}, {"written", result.written}};
  for (const auto& doc : result.written) {
    if (auto text = files.read(doc)) out[doc.substr(0, doc.size() - 5)] = json::parse(*text);
  }
  return out;
}

ApiResponse Api::dispatch(const ApiRequest& r) {
  static const std::regex session_re(R"(^/api/sessions/([^/]+)$)");
  static const std::regex session_op_re(R"(^/api/sessions/([^/]+)/(inputs|step)$)");
  static const std::regex project_re(R"(^/api/projects/([^/]+)$)");
  static const std::regex project_doc_re(R"(^/api/projects/([^/]+)/([^/]+)$)");
  const std::string& p = r.path;
  const std::string& m = r.method;
  std::smatch match;

  if (p == "/api/health" && m == "GET") return ok({{"status", "ok"}});

  if (p == "/api/compile" && m == "POST") {
    const json body = parse_body(r);
    if (!body.contains("circuit") || !body["circuit"].is_string())
      throw Error(ErrorCode::BadRequest, "missing 'circuit'");
    return ok(compile_document(body["circuit"].get<std::string>()));
  }
  if (p == "/api/verify" && m == "POST") return ok(verify_document(parse_body(r)));
  if (p == "/api/layout" && m == "POST") return ok(layout_document(parse_body(r)));
  if (p == "/api/patterns" && m == "POST") return ok(pattern_document(parse_body(r)));

  if (p == "/api/sessions" && m == "POST") {
    const json body = parse_body(r);
    const Netlist netlist = netlist_from_request(body);
    const SimConfig config =
        body.contains("sim_config") ? sim_config_from_json(body["sim_config"]) : SimConfig{};
    auto s = sessions_.create(netlist, config, body.value("autorun", false));
    return ok({{"id", s->id()}, {"autorun", s->autorun()}, {"state", s->state()}}, 201);
  }
  if (std::regex_match(p, match, session_op_re) && m == "POST") {
    auto s = sessions_.get(match[1].str());
    const json body = parse_body(r);
    if (match[2] == "inputs") {
      if (!body.contains("net") || !body["net"].is_string() || !body.contains("v"))
        throw Error(ErrorCode::BadRequest, "expected {\"net\", \"v\"}");
      const json result = s->set_input(body["net"].get<std::string>(), body["v"].get<int>());
      json state = result["state"];
      state["events"] = result["events"];
      return ok(state);
    }
    const double dt = body.value("dt", s->dt());
    return ok(s->step(dt));
  }
  if (std::regex_match(p, match, session_re)) {
    if (m == "GET") return ok(sessions_.get(match[1].str())->state());
    if (m == "DELETE") {
      if (!sessions_.remove(match[1].str()))
        throw Error(ErrorCode::NotFound, "no session '" + match[1].str() + "'");
      return ok({{"deleted", match[1].str()}});
    }
  }

  if (p == "/api/design/run" && m == "POST") {
    const json body = parse_body(r);
    if (!body.contains("project") || !body["project"].is_string())
      throw Error(ErrorCode::BadRequest, "missing 'project'");
    auto files = projects_.project(body["project"].get<std::string>());
    return ok(design_document(*files, body.value("pipeline_config", json()),
                              body["project"].get<std::string>()));
  }

  if (std::regex_match(p, match, project_re) && m == "GET") {
    if (!projects_.exists(match[1].str()))
      throw Error(ErrorCode::NotFound, "no project '" + match[1].str() + "'");
    return ok({{"project", match[1].str()}, {"documents", projects_.project(match[1].str())->list()}});
  }
  if (std::regex_match(p, match, project_doc_re)) {
    auto files = projects_.project(match[1].str());
    const std::string doc = match[2].str();
    if (!is_project_document(doc))
      throw Error(ErrorCode::NotFound, "unknown project document '" + doc + "'");
    if (m == "GET") {
      auto text = files->read(doc);
      if (!text) throw Error(ErrorCode::NotFound, doc + " not found in " + match[1].str());
      return {200, *text, "application/json"};
    }
    if (m == "PUT") {
      parse_body(r);  // must be JSON, stored byte for byte
      files->write(doc, r.body);
      return ok({{"project", match[1].str()}, {"document", doc}, {"bytes", r.body.size()}});
    }
  }
  return error_response(404, "NotFound", m + " " + p + " is not an endpoint");
}

}  // namespace fluidc
