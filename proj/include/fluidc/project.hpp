#pragma once

// Design project documents and their on-disk store.

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace fluidc {

inline constexpr std::array<std::string_view, 4> kInputAttributes = {"Binary", "Duration",
                                                                     "Frequency", "Edge"};
inline constexpr std::array<std::string_view, 4> kFeedbackTypes = {"Shape-changing", "Haptic",
                                                                   "Olfactory", "Acoustic"};

/// Documents written by the pipeline, named after the consultant's write_* tools.
inline constexpr std::array<std::string_view, 7> kProjectDocuments = {
    "design_goal.json", "input_module.json", "output_module.json", "computation_module.json",
    "circuit.json",     "review.json",       "io_design.json"};
/// Optional machine-readable truth table supplied alongside the documents.
inline constexpr std::string_view kTruthTableSpecDocument = "truth_table_spec.json";

bool is_project_document(std::string_view name);

struct InputSpec {
  std::string name;  // "Input A"
  std::string attribute;
  std::string location;
  std::string manipulation;
  std::string note;
};

struct OutputSpec {
  std::string name;  // "Output I"
  std::string feedback;
  std::string note;
};

struct ConditionSpec {
  std::string output;
  std::string condition;
};

struct DesignProject {
  std::optional<std::string> design_goal;
  std::optional<std::vector<InputSpec>> input_module;
  std::optional<std::vector<OutputSpec>> output_module;
  std::optional<std::vector<ConditionSpec>> computation_module;

  bool complete() const {
    return design_goal && input_module && output_module && computation_module;
  }
};

/// Canonical attribute / feedback spelling; throws MalformedToolCall when the
/// value is outside the vocabulary.
std::string normalize_attribute(std::string_view value);
std::string normalize_feedback(std::string_view value);
/// "A" -> "Input A", "II" -> "Output II"; throws MalformedToolCall otherwise.
std::string normalize_input_name(std::string_view value);
std::string normalize_output_name(std::string_view value);

// Document bodies. Parsers validate vocabularies and names and throw
// MalformedToolCall on schema violations.
nlohmann::json design_goal_to_json(const std::string& goal);
std::string design_goal_from_json(const nlohmann::json& j);
nlohmann::json input_module_to_json(const std::vector<InputSpec>& inputs);
std::vector<InputSpec> input_module_from_json(const nlohmann::json& j);
nlohmann::json output_module_to_json(const std::vector<OutputSpec>& outputs);
std::vector<OutputSpec> output_module_from_json(const nlohmann::json& j);
nlohmann::json computation_module_to_json(const std::vector<ConditionSpec>& conditions);
std::vector<ConditionSpec> computation_module_from_json(const nlohmann::json& j);

/// Compact one-line renderings used to fill instruction templates.
std::string render_inputs(const std::vector<InputSpec>& inputs);
std::string render_outputs(const std::vector<OutputSpec>& outputs);
std::string render_conditions(const std::vector<ConditionSpec>& conditions);

/// Pretty JSON with a trailing newline; the byte format of every persisted file.
std::string document_text(const nlohmann::json& j);

/// One project directory. Writes are atomic (temp file + rename) and
/// serialized by an internal mutex.
class ProjectFiles {
 public:
  explicit ProjectFiles(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  std::optional<std::string> read(std::string_view doc) const;
  void write(std::string_view doc, std::string_view content);
  void write_json(std::string_view doc, const nlohmann::json& j) { write(doc, document_text(j)); }
  std::vector<std::string> list() const;

  /// Loads whichever of the four consultant documents exist.
  DesignProject load() const;

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
};

/// Root directory holding one subdirectory per project.
class ProjectStore {
 public:
  explicit ProjectStore(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  /// Throws BadRequest for names that are not plain identifiers.
  std::shared_ptr<ProjectFiles> project(std::string_view name);
  bool exists(std::string_view name) const;

 private:
  std::filesystem::path root_;
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<ProjectFiles>, std::less<>> projects_;
};

}  // namespace fluidc
