#include "fluidc/agents.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <iostream>

#include "fluidc/error.hpp"
#include "fluidc/fchdl.hpp"
#include "fluidc/layout.hpp"
#include "fluidc/patterns.hpp"

namespace fluidc {

namespace prompts {
extern const std::string_view consultant;
extern const std::string_view logic_designer;
extern const std::string_view circuit_engineer;
extern const std::string_view inspector;
extern const std::string_view io_designer;
}  // namespace prompts

using nlohmann::json;

namespace {

constexpr int kMaxToolRounds = 8;

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Parses "{name}" at position i; returns the slot length or 0.
std::size_t slot_at(std::string_view t, std::size_t i, std::string& name) {
  if (t[i] != '{') return 0;
  std::size_t k = i + 1;
  while (k < t.size() && ident_char(t[k])) ++k;
  if (k == i + 1 || k >= t.size() || t[k] != '}') return 0;
  name = std::string(t.substr(i + 1, k - i - 1));
  return k - i + 1;
}

std::string join(const std::vector<std::string>& xs) {
  std::string out;
  for (const auto& x : xs) out += (out.empty() ? "" : ", ") + x;
  return out;
}

std::string text_of(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// Sends `request`, extracting a JSON object from the reply. One reprompt is
// allowed before giving up with JsonExtractionFailed.
json ask_json(ChatTransport& transport, ChatRequest request, const std::vector<std::string>& fields,
              const std::vector<std::string>& optional_fields = {}) {
  ChatResponse resp = transport.complete(request);
  try {
    return extract_json(resp.content, fields, optional_fields);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoJsonFound && e.code() != ErrorCode::SchemaMismatch) throw;
    request.messages.push_back({"assistant", resp.content, {}, {}});
    request.messages.push_back(
        {"user",
         std::string("That reply could not be used (") + e.what() +
             "). Answer again with only a JSON object with the fields: " + join(fields) + ".",
         {},
         {}});
  }
  resp = transport.complete(request);
  try {
    return extract_json(resp.content, fields, optional_fields);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoJsonFound && e.code() != ErrorCode::SchemaMismatch) throw;
    throw Error(ErrorCode::JsonExtractionFailed,
                "no usable JSON from " + request.agent + " after a retry: " + e.what());
  }
}

std::map<std::string, std::string> project_bindings(const DesignProject& p) {
  return {{"design_goal", p.design_goal.value_or("")},
          {"input_module", p.input_module ? render_inputs(*p.input_module) : ""},
          {"output_module", p.output_module ? render_outputs(*p.output_module) : ""},
          {"computation_module",
           p.computation_module ? render_conditions(*p.computation_module) : ""}};
}

json function_tool(const std::string& name, const std::string& description,
                   const json& properties, const std::vector<std::string>& required) {
  return {{"type", "function"},
          {"function",
           {{"name", name},
            {"description", description},
            {"parameters",
             {{"type", "object"}, {"properties", properties}, {"required", required}}}}}};
}

std::string project_state(const DesignProject& p) {
  const auto f = flags_for(p);
  auto mark = [](bool b) { return b ? "saved" : "open"; };
  return std::string("design goal: ") + mark(f.design_goal) + "; input module: " +
         mark(f.input_module) + "; output module: " + mark(f.output_module) +
         "; computation module: " + mark(f.computation_module);
}

}  // namespace

std::string_view role_key(AgentRole role) {
  switch (role) {
    case AgentRole::Consultant: return "consultant";
    case AgentRole::LogicDesigner: return "logic_designer";
    case AgentRole::CircuitEngineer: return "circuit_engineer";
    case AgentRole::Inspector: return "inspector";
    case AgentRole::IODesigner: return "io_designer";
  }
  return "consultant";
}

std::string_view instruction_template(AgentRole role) {
  switch (role) {
    case AgentRole::Consultant: return prompts::consultant;
    case AgentRole::LogicDesigner: return prompts::logic_designer;
    case AgentRole::CircuitEngineer: return prompts::circuit_engineer;
    case AgentRole::Inspector: return prompts::inspector;
    case AgentRole::IODesigner: return prompts::io_designer;
  }
  return prompts::consultant;
}

bool requires_memory(AgentRole role) {
  return role == AgentRole::Consultant || role == AgentRole::IODesigner ||
         role == AgentRole::CircuitEngineer;
}

std::string render_template(std::string_view t, const std::map<std::string, std::string>& bindings) {
  std::string out;
  out.reserve(t.size());
  for (std::size_t i = 0; i < t.size();) {
    if (t.compare(i, 2, "{{") == 0 || t.compare(i, 2, "}}") == 0) {
      out.push_back(t[i]);
      i += 2;
      continue;
    }
    std::string name;
    if (const std::size_t n = slot_at(t, i, name)) {
      const auto it = bindings.find(name);
      if (it == bindings.end())
        throw Error(ErrorCode::InvalidConfig, "template slot {" + name + "} has no binding");
      out += it->second;
      i += n;
      continue;
    }
    out.push_back(t[i++]);
  }
  return out;
}

std::vector<std::string> template_slots(std::string_view t) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < t.size();) {
    if (t.compare(i, 2, "{{") == 0 || t.compare(i, 2, "}}") == 0) {
      i += 2;
      continue;
    }
    std::string name;
    if (const std::size_t n = slot_at(t, i, name)) {
      if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
      i += n;
      continue;
    }
    ++i;
  }
  return out;
}

json extract_json(std::string_view text) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}' && --depth == 0) {
        try {
          json j = json::parse(text.substr(start, i - start + 1));
          if (j.is_object()) return j;
        } catch (const json::parse_error&) {
        }
        break;
      }
    }
  }
  throw Error(ErrorCode::NoJsonFound, "no JSON object found in reply");
}

json extract_json(std::string_view text, const std::vector<std::string>& fields,
                  const std::vector<std::string>& optional_fields) {
  json j = extract_json(text);
  std::vector<std::string> missing, extra;
  for (const auto& f : fields) {
    if (!j.contains(f)) missing.push_back(f);
  }
  for (const auto& [k, v] : j.items()) {
    if (std::find(fields.begin(), fields.end(), k) == fields.end() &&
        std::find(optional_fields.begin(), optional_fields.end(), k) == optional_fields.end())
      extra.push_back(k);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "reply JSON does not match the expected fields";
    if (!missing.empty()) msg += "; missing: " + join(missing);
    if (!extra.empty()) msg += "; extra: " + join(extra);
    throw Error(ErrorCode::SchemaMismatch, msg);
  }
  return j;
}

int parse_score(const json& v) {
  if (v.is_number()) return std::clamp(static_cast<int>(v.get<double>()), 1, 5);
  if (v.is_string()) {
    for (char c : v.get<std::string>()) {
      if (c >= '1' && c <= '5') return c - '0';
    }
  }
  return 1;
}

ConsultantFlags flags_for(const DesignProject& p) {
  return {p.design_goal.has_value(), p.input_module.has_value(), p.output_module.has_value(),
          p.computation_module.has_value()};
}

// ---------------------------------------------------------------------------
// Consultant

json consultant_tools() {
  const json text = {{"type", "string"}};
  const json input = {{"type", "object"},
                      {"properties",
                       {{"name", text},
                        {"attribute", {{"type", "string"}, {"enum", kInputAttributes}}},
                        {"location", text},
                        {"manipulation", text},
                        {"note", text}}},
                      {"required", {"name", "attribute", "location", "manipulation"}}};
  const json output = {{"type", "object"},
                       {"properties",
                        {{"name", text},
                         {"feedback", {{"type", "string"}, {"enum", kFeedbackTypes}}},
                         {"note", text}}},
                       {"required", {"name", "feedback"}}};
  const json condition = {{"type", "object"},
                          {"properties", {{"output", text}, {"condition", text}}},
                          {"required", {"output", "condition"}}};
  return json::array(
      {function_tool("write_design_goal", "Save the agreed design goal.", {{"goal", text}},
                     {"goal"}),
       function_tool("write_input_module", "Save the input module.",
                     {{"inputs", {{"type", "array"}, {"items", input}}}}, {"inputs"}),
       function_tool("write_output_module", "Save the output module.",
                     {{"outputs", {{"type", "array"}, {"items", output}}}}, {"outputs"}),
       function_tool("write_computation_module", "Save the computation module.",
                     {{"conditions", {{"type", "array"}, {"items", condition}}}}, {"conditions"}),
       function_tool("ask_user_next_agent",
                     "Hand over to the design agents once the user confirms the design.",
                     json::object(), {})});
}

ConsultantTurn consultant_turn(ProjectFiles& files, DesignProject& project, ChatExchange& history,
                               const std::string& user_message, ChatTransport& transport) {
  const std::string agent(role_key(AgentRole::Consultant));
  if (history.messages.empty()) {
    history.messages.push_back(
        {"system",
         render_template(instruction_template(AgentRole::Consultant),
                         {{"project_state", project_state(project)}}),
         {},
         {}});
  }
  history.messages.push_back({"user", user_message, {}, {}});

  ConsultantTurn turn;
  for (int round = 0; round < kMaxToolRounds; ++round) {
    ChatRequest req{agent, "", history.messages, consultant_tools(), std::nullopt};
    ChatResponse resp = transport.complete(req);
    history.messages.push_back({"assistant", resp.content, resp.tool_calls, {}});
    turn.reply = resp.content;
    if (resp.tool_calls.empty()) break;

    for (const auto& call : resp.tool_calls) {
      json result = {{"ok", true}};
      if (call.name == "write_design_goal") {
        project.design_goal = design_goal_from_json(call.arguments);
        files.write_json("design_goal.json", design_goal_to_json(*project.design_goal));
      } else if (call.name == "write_input_module") {
        project.input_module = input_module_from_json(call.arguments);
        files.write_json("input_module.json", input_module_to_json(*project.input_module));
      } else if (call.name == "write_output_module") {
        project.output_module = output_module_from_json(call.arguments);
        files.write_json("output_module.json", output_module_to_json(*project.output_module));
      } else if (call.name == "write_computation_module") {
        project.computation_module = computation_module_from_json(call.arguments);
        files.write_json("computation_module.json",
                         computation_module_to_json(*project.computation_module));
      } else if (call.name == "ask_user_next_agent") {
        if (flags_for(project).all()) {
          turn.next_agent_confirmed = true;
        } else {
          const std::string msg = "ask_user_next_agent called before every module was saved (" +
                                  project_state(project) + ")";
          std::cerr << "fluidc: " << to_string(ErrorCode::PhaseOrderViolation) << ": " << msg
                    << "\n";
          turn.rejected.push_back(msg);
          result = {{"error", to_string(ErrorCode::PhaseOrderViolation)}, {"message", msg}};
        }
      } else {
        throw Error(ErrorCode::MalformedToolCall, "unknown consultant tool '" + call.name + "'");
      }
      history.messages.push_back({"tool", result.dump(), {}, call.id});
    }
  }
  turn.flags = flags_for(project);
  return turn;
}

// ---------------------------------------------------------------------------
// Computation cluster

void PipelineConfig::validate() const {
  if (inspector_pass_threshold < 1 || inspector_pass_threshold > 5)
    throw Error(ErrorCode::InvalidConfig, "inspector_pass_threshold must be in [1, 5]");
  if (max_review_rounds < 1) throw Error(ErrorCode::InvalidConfig, "max_review_rounds must be >= 1");
  sim.validate();
}

PipelineConfig pipeline_config_from_json(const json& j) {
  PipelineConfig c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "pipeline config must be an object");
  try {
    c.inspector_pass_threshold = j.value("inspector_pass_threshold", c.inspector_pass_threshold);
    c.max_review_rounds = j.value("max_review_rounds", c.max_review_rounds);
    if (j.contains("endpoint") && !j["endpoint"].is_null())
      c.endpoint = endpoint_config_from_json(j["endpoint"]);
    if (j.contains("mock_dir") && !j["mock_dir"].is_null())
      c.mock_dir = j["mock_dir"].get<std::string>();
    if (j.contains("sim")) c.sim = sim_config_from_json(j["sim"]);
    c.layout_seed = j.value("layout_seed", c.layout_seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("bad pipeline config: ") + e.what());
  }
  c.validate();
  return c;
}

json pipeline_config_to_json(const PipelineConfig& c) {
  json j = {{"inspector_pass_threshold", c.inspector_pass_threshold},
            {"max_review_rounds", c.max_review_rounds},
            {"sim", sim_config_to_json(c.sim)},
            {"layout_seed", c.layout_seed}};
  if (c.endpoint) j["endpoint"] = endpoint_config_to_json(*c.endpoint);
  if (c.mock_dir) j["mock_dir"] = c.mock_dir->string();
  return j;
}

ClusterResult run_computation_cluster(const DesignProject& project, ChatTransport& transport,
                                      const PipelineConfig& config,
                                      const std::optional<TruthTableSpec>& spec) {
  config.validate();
  const auto base = project_bindings(project);
  ClusterResult result;

  // Logic designer: a single, memoryless call.
  {
    ChatRequest req{std::string(role_key(AgentRole::LogicDesigner)), "", {}, json::array(),
                    std::nullopt};
    req.messages.push_back(
        {"system", render_template(instruction_template(AgentRole::LogicDesigner), base), {}, {}});
    req.messages.push_back({"user", "Write the truth table for this design.", {}, {}});
    const json reply = ask_json(transport, req, {"truth_table", "description"});
    result.truth_table = text_of(reply["truth_table"]);
    result.truth_table_description = text_of(reply["description"]);
  }
  result.spec = spec ? spec : parse_truth_table_text(result.truth_table);

  ScoreRubric rubric;
  rubric.pass_threshold = config.inspector_pass_threshold;

  auto engineer_bindings = base;
  engineer_bindings["truth_table"] = result.truth_table;
  engineer_bindings["description"] = result.truth_table_description;
  engineer_bindings["review"] = "none yet";
  std::vector<ChatMessage> engineer_history;
  engineer_history.push_back(
      {"system",
       render_template(instruction_template(AgentRole::CircuitEngineer), engineer_bindings),
       {},
       {}});
  engineer_history.push_back({"user", "Design the circuit.", {}, {}});

  for (int round = 1; round <= config.max_review_rounds; ++round) {
    ReviewRound r;
    r.round = round;
    ++result.engineer_calls;
    ChatRequest ce{std::string(role_key(AgentRole::CircuitEngineer)), "", engineer_history,
                   json::array(), std::nullopt};
    const json candidate = ask_json(transport, ce, {"circuit", "description"});
    r.circuit = text_of(candidate["circuit"]);
    r.description = text_of(candidate["description"]);
    engineer_history.push_back({"assistant", candidate.dump(), {}, {}});

    try {
      parse_circuit(r.circuit);
      r.parsed = true;
    } catch (const Error&) {
      r.parsed = false;
    }
    r.report = inspect_circuit(r.circuit, result.spec, config.sim, rubric);

    auto inspector_bindings = base;
    inspector_bindings["description"] = result.truth_table_description;
    inspector_bindings["truth_table"] = result.truth_table;
    inspector_bindings["circuit"] = r.circuit;
    ChatRequest ins{std::string(role_key(AgentRole::Inspector)), "", {}, json::array(),
                    std::nullopt};
    ins.messages.push_back(
        {"system", render_template(instruction_template(AgentRole::Inspector), inspector_bindings),
         {}, {}});
    ins.messages.push_back({"user", "Review the circuit.", {}, {}});
    const json review = ask_json(transport, ins, {"review", "score"}, {"circuit"});
    r.model_review = text_of(review["review"]);
    r.model_score = parse_score(review["score"]);
    // The deterministic inspection can only lower the model's score.
    r.score = r.parsed ? std::min(r.model_score, r.report.score) : 1;
    result.rounds.push_back(r);

    if (r.parsed && r.score >= config.inspector_pass_threshold) {
      result.accepted = true;
      break;
    }
    engineer_history.push_back({"user",
                                "Inspector review: " + r.model_review +
                                    "\nAutomated check (score " + std::to_string(r.report.score) +
                                    "): " + r.report.review() + "\nRevise the circuit.",
                                {},
                                {}});
  }

  const ReviewRound* best = &result.rounds.front();
  for (const auto& r : result.rounds) {
    if (result.accepted) {
      best = &result.rounds.back();
      break;
    }
    if (r.parsed > best->parsed || (r.parsed == best->parsed && r.score > best->score)) best = &r;
  }
  result.circuit = best->circuit;
  result.description = best->description;
  result.score = best->score;
  return result;
}

// ---------------------------------------------------------------------------
// I/O designer

json io_designer_tools() {
  const json num = {{"type", "number"}};
  return json::array(
      {function_tool("Calculate_Sphere", "Sheet pattern for a sphere airbag.", {{"radius", num}},
                     {"radius"}),
       function_tool("Calculate_Cylinder", "Sheet pattern for a cylinder airbag.",
                     {{"radius", num}, {"height", num}}, {"radius", "height"}),
       function_tool("Calculate_Box", "Sheet pattern for a box airbag.",
                     {{"length", num}, {"width", num}, {"height", num}},
                     {"length", "width", "height"}),
       function_tool("Calculate_Fold", "Crease pattern for a folding airbag.",
                     {{"length", num}, {"width", num}, {"angle", num}},
                     {"length", "width", "angle"}),
       function_tool("Calculate_Bend", "Crease pattern for a bending airbag.",
                     {{"length", num}, {"width", num}, {"angle", num}},
                     {"length", "width", "angle"})});
}

IoDesignResult run_io_designer(const DesignProject& project, ChatTransport& transport) {
  const std::vector<std::string> fields = {"input_description", "output_description"};
  ChatRequest req{std::string(role_key(AgentRole::IODesigner)), "", {}, io_designer_tools(),
                  std::nullopt};
  req.messages.push_back(
      {"system",
       render_template(instruction_template(AgentRole::IODesigner), project_bindings(project)),
       {},
       {}});
  req.messages.push_back({"user", "Design the input and output modules.", {}, {}});

  IoDesignResult result;
  int tool_errors = 0;
  bool reprompted = false;
  for (int round = 0; round < kMaxToolRounds; ++round) {
    const ChatResponse resp = transport.complete(req);
    req.messages.push_back({"assistant", resp.content, resp.tool_calls, {}});
    if (resp.tool_calls.empty()) {
      try {
        const json j = extract_json(resp.content, fields);
        result.input_description = text_of(j["input_description"]);
        result.output_description = text_of(j["output_description"]);
        return result;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoJsonFound && e.code() != ErrorCode::SchemaMismatch) throw;
        if (reprompted)
          throw Error(ErrorCode::JsonExtractionFailed,
                      std::string("no usable JSON from io_designer after a retry: ") + e.what());
        reprompted = true;
        req.messages.push_back(
            {"user",
             std::string("That reply could not be used (") + e.what() +
                 "). Answer again with only a JSON object with the fields: " + join(fields) + ".",
             {},
             {}});
        continue;
      }
    }
    for (const auto& call : resp.tool_calls) {
      json content;
      try {
        json args = call.arguments;
        args["shape"] = call.name;
        const PatternResult p = calc_pattern(shape_request_from_json(args));
        content = pattern_to_json(p);
        result.patterns.push_back({{"tool", call.name},
                                   {"arguments", call.arguments},
                                   {"result", content},
                                   {"svg", pattern_svg(p)}});
      } catch (const Error& e) {
        if (++tool_errors > 1)
          throw Error(ErrorCode::ToolError, call.name + " failed again: " + e.what());
        content = {{"error", to_string(e.code())}, {"message", e.what()}};
      }
      req.messages.push_back({"tool", content.dump(), {}, call.id});
    }
  }
  throw Error(ErrorCode::ToolError, "io_designer did not finish within the tool round limit");
}

// ---------------------------------------------------------------------------
// Pipeline

json cluster_to_json(const ClusterResult& r) {
  json j = {{"circuit", r.circuit},
            {"description", r.description},
            {"truth_table", r.truth_table},
            {"truth_table_description", r.truth_table_description},
            {"score", r.score},
            {"accepted", r.accepted},
            {"engineer_calls", r.engineer_calls}};
  if (r.spec) j["truth_table_spec"] = truth_table_to_json(*r.spec);
  return j;
}

json review_to_json(const ClusterResult& r) {
  json rounds = json::array();
  for (const auto& x : r.rounds) {
    rounds.push_back({{"round", x.round},
                      {"circuit", x.circuit},
                      {"parsed", x.parsed},
                      {"review", x.model_review},
                      {"model_score", x.model_score},
                      {"inspection", report_to_json(x.report)},
                      {"score", x.score}});
  }
  return {{"accepted", r.accepted}, {"score", r.score}, {"rounds", rounds}};
}

json io_design_to_json(const IoDesignResult& r) {
  return {{"input_description", r.input_description},
          {"output_description", r.output_description},
          {"patterns", r.patterns}};
}

PipelineResult run_design_pipeline(ProjectFiles& files, ChatTransport& transport,
                                   const PipelineConfig& config) {
  config.validate();
  const DesignProject project = files.load();
  if (!project.complete()) {
    const auto f = flags_for(project);
    std::vector<std::string> missing;
    if (!f.design_goal) missing.push_back("design_goal.json");
    if (!f.input_module) missing.push_back("input_module.json");
    if (!f.output_module) missing.push_back("output_module.json");
    if (!f.computation_module) missing.push_back("computation_module.json");
    throw Error(ErrorCode::MissingDocument, "project is missing " + join(missing));
  }
  std::optional<TruthTableSpec> spec;
  if (auto text = files.read(kTruthTableSpecDocument)) {
    try {
      spec = truth_table_from_json(json::parse(*text));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::BadRequest, std::string("truth_table_spec.json: ") + e.what());
    }
  }

  // The I/O designer does not depend on the circuit, so it runs alongside.
  auto io_future =
      std::async(std::launch::async, [&] { return run_io_designer(project, transport); });
  PipelineResult out;
  try {
    out.cluster = run_computation_cluster(project, transport, config, spec);
  } catch (...) {
    io_future.wait();
    throw;
  }
  out.io = io_future.get();

  json circuit = cluster_to_json(out.cluster);
  try {
    const Netlist netlist = parse_circuit(out.cluster.circuit);
    circuit["netlist"] = netlist_to_json(netlist);
    SAConfig sa;
    sa.seed = config.layout_seed;
    const LayoutResult layout = place(netlist, sa);
    circuit["layout"] = layout_to_json(layout);
  } catch (const Error&) {
    circuit["netlist"] = nullptr;
  }
  files.write_json("circuit.json", circuit);
  files.write_json("review.json", review_to_json(out.cluster));
  files.write_json("io_design.json", io_design_to_json(out.io));
  out.written = {"circuit.json", "review.json", "io_design.json"};
  return out;
}

}  // namespace fluidc
