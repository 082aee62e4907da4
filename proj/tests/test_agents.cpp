#include <cstdlib>
#include <functional>

#include "doctest.h"
#include "fluidc/agents.hpp"
#include "fluidc/error.hpp"
#include "support.hpp"

using namespace fluidc;
using nlohmann::json;
namespace fs = std::filesystem;
using testsupport::fixture;
using testsupport::slurp;

namespace {

ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

void write_reply(const fs::path& dir, const std::string& agent, int index, const std::string& content) {
  fs::create_directories(dir / agent);
  char name[16];
  std::snprintf(name, sizeof name, "%03d.json", index);
  const json body = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}};
  std::ofstream(dir / agent / name) << body.dump(2);
}

DesignProject dg90_project() { return ProjectFiles(fixture("dg90/project")).load(); }

const char* kFaulty = "OR (A, B; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)";
const char* kCorrected =
    "NOT(A; C) NOT(B; D) OR (C, D; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)";
const char* kDg90Table =
    "If A = 0 and B = 0, then Output I = 1; If A = 0 and B = 1, then Output I = 1; "
    "If A = 1 and B = 0, then Output I = 1; If A = 1 and B = 1, then Output I = 0";

}  // namespace

TEST_CASE("template rendering") {
  CHECK(render_template("Goal: {design_goal}.", {{"design_goal", "walk"}}) == "Goal: walk.");
  CHECK(render_template("{{\"circuit\": \"{c}\"}}", {{"c", "NOT(A; B)"}}) ==
        "{\"circuit\": \"NOT(A; B)\"}");
  CHECK(error_of([] { render_template("{a} {b}", {{"a", "x"}}); }) == ErrorCode::InvalidConfig);
  CHECK(template_slots("{b} {a} {{x}} {b}") == std::vector<std::string>{"b", "a"});

  for (auto role : {AgentRole::Consultant, AgentRole::LogicDesigner, AgentRole::CircuitEngineer,
                    AgentRole::Inspector, AgentRole::IODesigner}) {
    CAPTURE(role_key(role));
    CHECK_FALSE(instruction_template(role).empty());
    std::map<std::string, std::string> all;
    for (const auto& s : template_slots(instruction_template(role))) all[s] = "x";
    CHECK_NOTHROW(render_template(instruction_template(role), all));
  }
  CHECK(requires_memory(AgentRole::Consultant));
  CHECK(requires_memory(AgentRole::IODesigner));
  CHECK(requires_memory(AgentRole::CircuitEngineer));
  CHECK_FALSE(requires_memory(AgentRole::LogicDesigner));
  CHECK_FALSE(requires_memory(AgentRole::Inspector));
}

TEST_CASE("json extraction") {
  const json a = extract_json(
      "Here you go: {\"circuit\":\"Filter(input, 3; output)\",\"description\":\"...\"}",
      {"circuit", "description"});
  CHECK(a["circuit"] == "Filter(input, 3; output)");

  const json b = extract_json("```json\n{\"review\": \"ok }\", \"score\": 4}\n```\nHope that helps {sic}",
                              {"review", "score"});
  CHECK(b["review"] == "ok }");
  CHECK(b["score"] == 4);

  try {
    extract_json("{}", {"circuit", "description"});
    FAIL("expected SchemaMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SchemaMismatch);
    CHECK(std::string(e.what()).find("circuit") != std::string::npos);
  }
  CHECK(error_of([] { extract_json("{\"review\":\"x\",\"score\":1,\"mood\":2}", {"review", "score"}); }) ==
        ErrorCode::SchemaMismatch);
  CHECK(extract_json("{\"review\":\"x\",\"score\":1,\"circuit\":\"c\"}", {"review", "score"}, {"circuit"})
            .contains("circuit"));
  CHECK(error_of([] { extract_json("just words"); }) == ErrorCode::NoJsonFound);
  CHECK(error_of([] { extract_json("{ never closed"); }) == ErrorCode::NoJsonFound);
}

TEST_CASE("score parsing") {
  CHECK(parse_score(4) == 4);
  CHECK(parse_score("4") == 4);
  CHECK(parse_score("Score: 4/5") == 4);
  CHECK(parse_score("5/5") == 5);
  CHECK(parse_score("excellent") == 1);
  CHECK(parse_score(nullptr) == 1);
}

TEST_CASE("wire format and request hashing") {
  ChatRequest r{"logic_designer", "gpt-4o", {{"system", "be brief", {}, {}}, {"user", "hi", {}, {}}}, json::array(), std::nullopt};
  const json body = request_to_json(r);
  CHECK(body["model"] == "gpt-4o");
  CHECK(body["messages"][0]["role"] == "system");
  CHECK_FALSE(body.contains("agent"));
  const std::string h = request_hash(r);
  CHECK(h.size() == 16);
  CHECK(h.find_first_not_of("0123456789abcdef") == std::string::npos);
  CHECK(request_hash(r) == h);
  ChatRequest other = r;
  other.agent = "inspector";
  CHECK(request_hash(other) == h);
  other.messages[1].content = "hello";
  CHECK(request_hash(other) != h);

  const ChatResponse bare = response_from_json(json::parse(
      R"({"role":"assistant","content":null,"tool_calls":[{"id":"c1","type":"function","function":{"name":"Calculate_Sphere","arguments":"{\"radius\": 8}"}}]})"));
  REQUIRE(bare.tool_calls.size() == 1);
  CHECK(bare.tool_calls[0].arguments["radius"] == 8);
  CHECK(bare.content.empty());
  CHECK(error_of([] {
          response_from_json(json::parse(
              R"({"choices":[{"message":{"tool_calls":[{"id":"c","type":"function","function":{"name":"x","arguments":"{nope"}}]}}]})"));
        }) == ErrorCode::MalformedToolCall);
}

TEST_CASE("mock transport prefers an exact request hash") {
  const auto dir = testsupport::temp_dir("mock");
  write_reply(dir, "inspector", 1, "from sequence");
  ChatRequest r{"inspector", "", {{"user", "pinned", {}, {}}}, json::array(), std::nullopt};
  {
    const json pinned = {{"role", "assistant"}, {"content", "from hash"}};
    std::ofstream(dir / (request_hash(r) + ".json")) << pinned.dump();
  }
  MockTransport t(dir);
  CHECK(t.complete(r).content == "from hash");
  ChatRequest other = r;
  other.messages[0].content = "anything else";
  CHECK(t.complete(other).content == "from sequence");
  CHECK(error_of([&] { t.complete(other); }) == ErrorCode::TransportError);
  CHECK(t.requests().size() == 3);
  fs::remove_all(dir);
}

TEST_CASE("consultant walkthrough reproduces the golden documents") {
  const auto dir = testsupport::temp_dir("walk");
  ProjectFiles files(dir);
  DesignProject project;
  ChatExchange history;
  MockTransport transport(fixture("walkthrough/mock"));
  const json turns = json::parse(slurp(fixture("walkthrough/user_turns.json")));
  REQUIRE(turns.size() == 4);

  std::vector<ConsultantTurn> out;
  for (const auto& t : turns) out.push_back(consultant_turn(files, project, history, t, transport));

  CHECK(out[0].flags.design_goal);
  CHECK_FALSE(out[0].flags.input_module);
  CHECK(out[1].flags.input_module);
  CHECK(out[1].flags.output_module);
  CHECK_FALSE(out[1].flags.computation_module);
  // The early hand-off in turn three is refused and the turn carries on.
  REQUIRE(out[2].rejected.size() == 1);
  CHECK_FALSE(out[2].next_agent_confirmed);
  CHECK(out[2].flags.all());
  CHECK(out[3].next_agent_confirmed);
  CHECK(out[3].rejected.empty());
  for (const auto& t : out) CHECK_FALSE(t.reply.empty());

  CHECK(history.messages.front().role == "system");
  for (std::size_t i = 0; i < history.messages.size(); ++i) {
    if (history.messages[i].role == "tool") {
      const auto& prev = history.messages[i - 1];
      CHECK((prev.role == "tool" || !prev.tool_calls.empty()));
    }
  }

  for (const char* doc : {"design_goal.json", "input_module.json", "output_module.json", "computation_module.json"}) {
    CAPTURE(doc);
    const auto got = files.read(doc);
    REQUIRE(got.has_value());
    CHECK(*got == slurp(fixture(std::string("walkthrough/golden/") + doc)));
  }
  fs::remove_all(dir);
}

TEST_CASE("consultant rejects unknown vocabularies") {
  const auto dir = testsupport::temp_dir("vocab");
  const auto mock = dir / "mock";
  fs::create_directories(mock / "consultant");
  const json reply = json::parse(R"({"choices":[{"message":{"content":null,"tool_calls":[{"id":"c","type":"function",
      "function":{"name":"write_output_module","arguments":"{\"outputs\":[{\"name\":\"I\",\"feedback\":\"Telepathic\"}]}"}}]}}]})");
  std::ofstream(mock / "consultant" / "001.json") << reply.dump();
  ProjectFiles files(dir / "project");
  DesignProject project;
  ChatExchange history;
  MockTransport t(mock);
  CHECK(error_of([&] { consultant_turn(files, project, history, "hi", t); }) == ErrorCode::MalformedToolCall);
  CHECK_FALSE(files.read("output_module.json").has_value());
  fs::remove_all(dir);
}

TEST_CASE("DG90 cluster: faulty first round, corrected second") {
  MockTransport t(fixture("dg90/mock"));
  PipelineConfig config;
  const ClusterResult r = run_computation_cluster(dg90_project(), t, config);
  CHECK(r.engineer_calls == 2);
  REQUIRE(r.rounds.size() == 2);
  CHECK(r.rounds[0].circuit == kFaulty);
  CHECK(r.rounds[0].score <= 3);
  CHECK(r.rounds[0].report.mismatches() == 2);
  CHECK(r.accepted);
  CHECK(r.circuit.find("NOT(A; C) NOT(B; D)") != std::string::npos);
  CHECK(r.score == 5);
  CHECK(t.calls("logic_designer") == 1);
  CHECK(t.calls("inspector") == 2);

  // The second engineer request carries the first review; the inspector starts fresh.
  std::vector<ChatRequest> engineer, inspector;
  for (const auto& q : t.requests()) {
    if (q.agent == "circuit_engineer") engineer.push_back(q);
    if (q.agent == "inspector") inspector.push_back(q);
  }
  REQUIRE(engineer.size() == 2);
  CHECK(engineer[1].messages.size() > engineer[0].messages.size());
  CHECK(engineer[1].messages.back().content.find("inverted") != std::string::npos);
  REQUIRE(inspector.size() == 2);
  CHECK(inspector[0].messages.size() == inspector[1].messages.size());
}

TEST_CASE("review rounds are capped") {
  MockTransport t(fixture("dg90/mock"));
  PipelineConfig config;
  config.max_review_rounds = 1;
  const ClusterResult r = run_computation_cluster(dg90_project(), t, config);
  CHECK(r.engineer_calls == 1);
  CHECK_FALSE(r.accepted);
  CHECK(r.circuit == kFaulty);
}

TEST_CASE("single round when the first circuit passes") {
  MockTransport t(fixture("prose_then_json"));
  const ClusterResult r = run_computation_cluster(dg90_project(), t, PipelineConfig{});
  CHECK(r.engineer_calls == 1);
  CHECK(r.accepted);
  CHECK(r.circuit == "AND(A, B; Output I)");
  CHECK(t.calls("logic_designer") == 2);
}

TEST_CASE("prose without JSON fails after one reprompt") {
  MockTransport t(fixture("prose"));
  CHECK(error_of([&] { run_computation_cluster(dg90_project(), t, PipelineConfig{}); }) ==
        ErrorCode::JsonExtractionFailed);
  CHECK(t.calls("logic_designer") == 2);
}

TEST_CASE("a perfect model score cannot rescue a failing circuit") {
  const auto dir = testsupport::temp_dir("veto");
  write_reply(dir, "logic_designer", 1, json({{"truth_table", kDg90Table}, {"description", "d"}}).dump());
  for (int i = 1; i <= 3; ++i) {
    write_reply(dir, "circuit_engineer", i, json({{"circuit", kFaulty}, {"description", "d"}}).dump());
    write_reply(dir, "inspector", i, R"({"review": "flawless", "score": 5})");
  }
  MockTransport t(dir);
  const ClusterResult r = run_computation_cluster(dg90_project(), t, PipelineConfig{});
  CHECK(r.engineer_calls == 3);
  CHECK_FALSE(r.accepted);
  CHECK(r.score <= 3);
  fs::remove_all(dir);
}

TEST_CASE("an unparseable circuit forces another round") {
  const auto dir = testsupport::temp_dir("unparsed");
  write_reply(dir, "logic_designer", 1, json({{"truth_table", kDg90Table}, {"description", "d"}}).dump());
  write_reply(dir, "circuit_engineer", 1, json({{"circuit", "NOT(A; C"}, {"description", "d"}}).dump());
  write_reply(dir, "circuit_engineer", 2, json({{"circuit", kCorrected}, {"description", "d"}}).dump());
  write_reply(dir, "inspector", 1, R"({"review": "great", "score": 5})");
  write_reply(dir, "inspector", 2, R"({"review": "great", "score": 5})");
  MockTransport t(dir);
  const ClusterResult r = run_computation_cluster(dg90_project(), t, PipelineConfig{});
  REQUIRE(r.rounds.size() == 2);
  CHECK_FALSE(r.rounds[0].parsed);
  CHECK(r.accepted);
  CHECK(r.circuit == kCorrected);
  fs::remove_all(dir);
}

TEST_CASE("io designer tool calls") {
  SUBCASE("bend from the DG90 fixture") {
    MockTransport t(fixture("dg90/mock"));
    const IoDesignResult r = run_io_designer(dg90_project(), t);
    REQUIRE(r.patterns.size() == 1);
    const json& res = r.patterns[0]["result"];
    CHECK(res["a"] == 3.33);
    CHECK(res["d"] == 8.08);
    CHECK(res["D"] == 20);
    CHECK(res["n"] == 2);
    CHECK(r.output_description.find("bending") != std::string::npos);
    const auto reqs = t.requests();
    REQUIRE(reqs.size() == 2);
    CHECK(reqs[1].messages.back().role == "tool");
    CHECK(json::parse(reqs[1].messages.back().content)["d"] == 8.08);
    CHECK(reqs[0].tools.size() == 5);
  }
  SUBCASE("a bad angle is relayed and the corrected call is honored") {
    MockTransport t(fixture("io_retry"));
    const IoDesignResult r = run_io_designer(dg90_project(), t);
    CHECK(r.patterns.size() == 1);
    CHECK(r.input_description == "pad");
    const auto reqs = t.requests();
    REQUIRE(reqs.size() == 3);
    CHECK(json::parse(reqs[1].messages.back().content)["error"] == "AngleOutOfRange");
  }
  SUBCASE("a second tool error aborts") {
    MockTransport t(fixture("io_twice"));
    CHECK(error_of([&] { run_io_designer(dg90_project(), t); }) == ErrorCode::ToolError);
  }
}

TEST_CASE("pipeline writes its documents deterministically") {
  std::vector<std::map<std::string, std::string>> runs;
  for (int i = 0; i < 2; ++i) {
    const auto dir = testsupport::temp_dir("pipe");
    testsupport::copy_dir(fixture("dg90/project"), dir);
    ProjectFiles files(dir);
    MockTransport t(fixture("dg90/mock"));
    PipelineConfig config;
    config.mock_dir = fixture("dg90/mock");
    const PipelineResult r = run_design_pipeline(files, t, config);
    CHECK(r.written == std::vector<std::string>{"circuit.json", "review.json", "io_design.json"});
    std::map<std::string, std::string> docs;
    for (const auto& name : r.written) docs[name] = files.read(name).value_or("");
    runs.push_back(docs);
    const json circuit = json::parse(docs["circuit.json"]);
    CHECK(circuit["circuit"] == kCorrected);
    CHECK(circuit["netlist"]["operators"].size() == 5);
    CHECK(circuit["layout"]["feasible"] == true);
    fs::remove_all(dir);
  }
  CHECK(runs[0] == runs[1]);
}

TEST_CASE("pipeline needs the consultant documents") {
  const auto dir = testsupport::temp_dir("missing");
  std::filesystem::copy_file(fixture("dg90/project/design_goal.json"), dir / "design_goal.json");
  ProjectFiles files(dir);
  MockTransport t(fixture("dg90/mock"));
  try {
    run_design_pipeline(files, t, PipelineConfig{});
    FAIL("expected MissingDocument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingDocument);
    CHECK(std::string(e.what()).find("input_module.json") != std::string::npos);
  }
  CHECK(t.requests().empty());
  fs::remove_all(dir);
}

TEST_CASE("token values never reach persisted files") {
  const std::string secret = "sk-test-5f2a9c0e71";
  ::setenv("FLUIDC_TEST_TOKEN", secret.c_str(), 1);
  const auto dir = testsupport::temp_dir("token");
  testsupport::copy_dir(fixture("dg90/project"), dir);
  ProjectFiles files(dir);
  MockTransport t(fixture("dg90/mock"));
  PipelineConfig config;
  EndpointConfig ep;
  ep.token_env = "FLUIDC_TEST_TOKEN";
  config.endpoint = ep;
  run_design_pipeline(files, t, config);
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) CHECK(slurp(entry.path()).find(secret) == std::string::npos);
  }
  const std::string cfg = pipeline_config_to_json(config).dump();
  CHECK(cfg.find(secret) == std::string::npos);
  CHECK(cfg.find("FLUIDC_TEST_TOKEN") != std::string::npos);
  for (const auto& q : t.requests()) CHECK(request_to_json(q).dump().find(secret) == std::string::npos);
  ::unsetenv("FLUIDC_TEST_TOKEN");
  fs::remove_all(dir);
}

TEST_CASE("pipeline config") {
  const PipelineConfig c = pipeline_config_from_json(json::parse(R"({"inspector_pass_threshold":5,"max_review_rounds":2})"));
  CHECK(c.inspector_pass_threshold == 5);
  CHECK(c.max_review_rounds == 2);
  CHECK(error_of([] { pipeline_config_from_json(json::parse(R"({"inspector_pass_threshold":6})")); }) ==
        ErrorCode::InvalidConfig);
  CHECK(error_of([] { pipeline_config_from_json(json::parse(R"({"max_review_rounds":0})")); }) ==
        ErrorCode::InvalidConfig);
  const PipelineConfig back = pipeline_config_from_json(pipeline_config_to_json(c));
  CHECK(back.inspector_pass_threshold == 5);
}
