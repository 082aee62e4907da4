#pragma once

// The five-agent design pipeline: consultant dialogue, the logic designer /
// circuit engineer / inspector loop, and the I/O designer.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fluidc/project.hpp"
#include "fluidc/simulator.hpp"
#include "fluidc/transport.hpp"
#include "fluidc/verifier.hpp"
#include "json.hpp"

namespace fluidc {

enum class AgentRole { Consultant, LogicDesigner, CircuitEngineer, Inspector, IODesigner };

/// Fixture namespace, e.g. "circuit_engineer".
std::string_view role_key(AgentRole role);
std::string_view instruction_template(AgentRole role);
/// Conversation-keeping roles resend their whole history on every call.
bool requires_memory(AgentRole role);

/// Fills {slot} placeholders; "{{" and "}}" are literal braces. Throws
/// InvalidConfig when a slot has no binding.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& bindings);
/// Slot names used by a template, in order of first use.
std::vector<std::string> template_slots(std::string_view tmpl);

/// First balanced top-level object in free text (prose and code fences are
/// skipped). Throws NoJsonFound.
nlohmann::json extract_json(std::string_view text);
/// As above, then checks the field set; SchemaMismatch names missing and
/// extra fields. `optional_fields` may appear but need not.
nlohmann::json extract_json(std::string_view text, const std::vector<std::string>& fields,
                            const std::vector<std::string>& optional_fields = {});
/// Reads a 1-5 score from a number or text such as "4" or "Score: 4/5";
/// anything unreadable counts as 1.
int parse_score(const nlohmann::json& value);

struct ConsultantFlags {
  bool design_goal = false;
  bool input_module = false;
  bool output_module = false;
  bool computation_module = false;
  bool all() const { return design_goal && input_module && output_module && computation_module; }
};

ConsultantFlags flags_for(const DesignProject& project);

struct ChatExchange {
  std::vector<ChatMessage> messages;
};

struct ConsultantTurn {
  std::string reply;
  ConsultantFlags flags;
  bool next_agent_confirmed = false;
  /// Tool calls rejected during the turn (e.g. PhaseOrderViolation).
  std::vector<std::string> rejected;
};

/// Tool schema offered to the consultant model.
nlohmann::json consultant_tools();

ConsultantTurn consultant_turn(ProjectFiles& files, DesignProject& project, ChatExchange& history,
                               const std::string& user_message, ChatTransport& transport);

struct PipelineConfig {
  int inspector_pass_threshold = 4;
  int max_review_rounds = 3;
  std::optional<EndpointConfig> endpoint;
  std::optional<std::filesystem::path> mock_dir;
  /// Simulation settings for the deterministic inspection.
  SimConfig sim;
  std::uint64_t layout_seed = 42;

  void validate() const;
};

PipelineConfig pipeline_config_from_json(const nlohmann::json& j);
nlohmann::json pipeline_config_to_json(const PipelineConfig& c);

struct ReviewRound {
  int round = 0;
  std::string circuit;
  std::string description;
  bool parsed = false;
  std::string model_review;
  int model_score = 1;
  InspectionReport report;
  int score = 1;  // min(model, deterministic)
};

struct ClusterResult {
  std::string truth_table;
  std::string truth_table_description;
  std::optional<TruthTableSpec> spec;
  std::string circuit;
  std::string description;
  int score = 1;
  bool accepted = false;
  int engineer_calls = 0;
  std::vector<ReviewRound> rounds;
};

/// `spec` overrides the truth table parsed from the logic designer's text.
ClusterResult run_computation_cluster(const DesignProject& project, ChatTransport& transport,
                                      const PipelineConfig& config,
                                      const std::optional<TruthTableSpec>& spec = std::nullopt);

struct IoDesignResult {
  std::string input_description;
  std::string output_description;
  /// One entry per successful tool call: {"tool","arguments","result","svg"}.
  nlohmann::json patterns = nlohmann::json::array();
};

nlohmann::json io_designer_tools();
IoDesignResult run_io_designer(const DesignProject& project, ChatTransport& transport);

struct PipelineResult {
  ClusterResult cluster;
  IoDesignResult io;
  std::vector<std::string> written;  // document names
};

/// Needs the four consultant documents (MissingDocument otherwise). Writes
/// circuit.json, review.json and io_design.json.
PipelineResult run_design_pipeline(ProjectFiles& files, ChatTransport& transport,
                                   const PipelineConfig& config);

nlohmann::json cluster_to_json(const ClusterResult& r);
nlohmann::json review_to_json(const ClusterResult& r);
nlohmann::json io_design_to_json(const IoDesignResult& r);

}  // namespace fluidc
