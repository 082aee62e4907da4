#include "fluidc/project.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "fluidc/error.hpp"

namespace fluidc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string squash(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

template <std::size_t N>
std::string pick(std::string_view value, const std::array<std::string_view, N>& vocab,
                 const char* what) {
  const std::string key = squash(value);
  for (auto v : vocab) {
    if (squash(v) == key) return std::string(v);
  }
  throw Error(ErrorCode::MalformedToolCall,
              std::string("unknown ") + what + " '" + std::string(value) + "'");
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

const json& member(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorCode::MalformedToolCall, std::string("missing field '") + key + "'");
  return j.at(key);
}

std::string text_field(const json& j, const char* key, bool required = true) {
  if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) {
    if (required)
      throw Error(ErrorCode::MalformedToolCall, std::string("missing field '") + key + "'");
    return {};
  }
  const auto& v = j.at(key);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return v.dump();
  throw Error(ErrorCode::MalformedToolCall, std::string("field '") + key + "' must be text");
}

// Accepts either the bare array or {"<key>": [...]}.
const json& list_body(const json& j, const char* key) {
  const json& arr = j.is_array() ? j : member(j, key);
  if (!arr.is_array())
    throw Error(ErrorCode::MalformedToolCall, std::string("'") + key + "' must be a list");
  return arr;
}

}  // namespace

bool is_project_document(std::string_view name) {
  return name == kTruthTableSpecDocument ||
         std::find(kProjectDocuments.begin(), kProjectDocuments.end(), name) !=
             kProjectDocuments.end();
}

std::string normalize_attribute(std::string_view value) {
  return pick(value, kInputAttributes, "input attribute");
}

std::string normalize_feedback(std::string_view value) {
  return pick(value, kFeedbackTypes, "feedback type");
}

std::string normalize_input_name(std::string_view value) {
  static const std::regex re(R"(^\s*(?:input\s+)?([A-Za-z])\s*$)", std::regex::icase);
  std::cmatch m;
  const std::string s(value);
  if (!std::regex_match(s.c_str(), m, re))
    throw Error(ErrorCode::MalformedToolCall, "input name must be a letter, got '" + s + "'");
  return "Input " + std::string(1, static_cast<char>(std::toupper(m[1].str()[0])));
}

std::string normalize_output_name(std::string_view value) {
  static const std::regex re(R"(^\s*(?:output\s+)?([ivxlc]+)\s*$)", std::regex::icase);
  std::cmatch m;
  const std::string s(value);
  if (!std::regex_match(s.c_str(), m, re))
    throw Error(ErrorCode::MalformedToolCall,
                "output name must be a Roman numeral, got '" + s + "'");
  std::string roman = m[1].str();
  for (auto& c : roman) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return "Output " + roman;
}

json design_goal_to_json(const std::string& goal) { return {{"design_goal", goal}}; }

std::string design_goal_from_json(const json& j) {
  std::string goal;
  if (j.is_string()) {
    goal = j.get<std::string>();
  } else if (j.is_object() && j.contains("design_goal")) {
    goal = text_field(j, "design_goal");
  } else {
    goal = text_field(j, "goal");
  }
  goal = trim(goal);
  if (goal.empty()) throw Error(ErrorCode::MalformedToolCall, "design goal is empty");
  return goal;
}

json input_module_to_json(const std::vector<InputSpec>& inputs) {
  json arr = json::array();
  for (const auto& i : inputs) {
    arr.push_back({{"name", i.name},
                   {"attribute", i.attribute},
                   {"location", i.location},
                   {"manipulation", i.manipulation},
                   {"note", i.note}});
  }
  return {{"input_module", arr}};
}

std::vector<InputSpec> input_module_from_json(const json& j) {
  const json& arr = list_body(j.is_object() && j.contains("inputs") ? j["inputs"] : j,
                              "input_module");
  std::vector<InputSpec> out;
  for (const auto& e : arr) {
    InputSpec s;
    s.name = normalize_input_name(text_field(e, "name"));
    s.attribute = normalize_attribute(text_field(e, "attribute"));
    s.location = text_field(e, "location", false);
    s.manipulation = text_field(e, "manipulation", false);
    s.note = text_field(e, "note", false);
    for (const auto& prev : out) {
      if (prev.name == s.name)
        throw Error(ErrorCode::MalformedToolCall, "duplicate input '" + s.name + "'");
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw Error(ErrorCode::MalformedToolCall, "input module is empty");
  return out;
}

json output_module_to_json(const std::vector<OutputSpec>& outputs) {
  json arr = json::array();
  for (const auto& o : outputs) {
    arr.push_back({{"name", o.name}, {"feedback", o.feedback}, {"note", o.note}});
  }
  return {{"output_module", arr}};
}

std::vector<OutputSpec> output_module_from_json(const json& j) {
  const json& arr = list_body(j.is_object() && j.contains("outputs") ? j["outputs"] : j,
                              "output_module");
  std::vector<OutputSpec> out;
  for (const auto& e : arr) {
    OutputSpec s;
    s.name = normalize_output_name(text_field(e, "name"));
    s.feedback = normalize_feedback(text_field(e, "feedback"));
    s.note = text_field(e, "note", false);
    for (const auto& prev : out) {
      if (prev.name == s.name)
        throw Error(ErrorCode::MalformedToolCall, "duplicate output '" + s.name + "'");
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw Error(ErrorCode::MalformedToolCall, "output module is empty");
  return out;
}

json computation_module_to_json(const std::vector<ConditionSpec>& conditions) {
  json arr = json::array();
  for (const auto& c : conditions) arr.push_back({{"output", c.output}, {"condition", c.condition}});
  return {{"computation_module", arr}};
}

std::vector<ConditionSpec> computation_module_from_json(const json& j) {
  const json& arr = list_body(j.is_object() && j.contains("conditions") ? j["conditions"] : j,
                              "computation_module");
  std::vector<ConditionSpec> out;
  for (const auto& e : arr) {
    ConditionSpec c;
    c.output = normalize_output_name(text_field(e, "output"));
    c.condition = trim(text_field(e, "condition"));
    if (c.condition.empty())
      throw Error(ErrorCode::MalformedToolCall, "empty condition for " + c.output);
    out.push_back(std::move(c));
  }
  if (out.empty()) throw Error(ErrorCode::MalformedToolCall, "computation module is empty");
  return out;
}

std::string render_inputs(const std::vector<InputSpec>& inputs) {
  std::string out;
  for (const auto& i : inputs) {
    if (!out.empty()) out += "; ";
    out += i.name + ", " + i.attribute + ", " + i.location + ", " + i.manipulation;
    if (!i.note.empty()) out += ", " + i.note;
  }
  return out;
}

std::string render_outputs(const std::vector<OutputSpec>& outputs) {
  std::string out;
  for (const auto& o : outputs) {
    if (!out.empty()) out += "; ";
    out += o.name + ", " + o.feedback;
    if (!o.note.empty()) out += ", " + o.note;
  }
  return out;
}

std::string render_conditions(const std::vector<ConditionSpec>& conditions) {
  std::string out;
  for (const auto& c : conditions) {
    if (!out.empty()) out += "; ";
    out += c.output + ", " + c.condition;
  }
  return out;
}

std::string document_text(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------

ProjectFiles::ProjectFiles(fs::path dir) : dir_(std::move(dir)) {}

std::optional<std::string> ProjectFiles::read(std::string_view doc) const {
  if (!is_project_document(doc))
    throw Error(ErrorCode::BadRequest, "unknown project document '" + std::string(doc) + "'");
  std::lock_guard lock(mutex_);
  std::ifstream in(dir_ / std::string(doc), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void ProjectFiles::write(std::string_view doc, std::string_view content) {
  if (!is_project_document(doc))
    throw Error(ErrorCode::BadRequest, "unknown project document '" + std::string(doc) + "'");
  static std::atomic<unsigned long> counter{0};
  std::lock_guard lock(mutex_);
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir_.string() + ": " + ec.message());
  const fs::path target = dir_ / std::string(doc);
  std::ostringstream tmp_name;
  tmp_name << '.' << doc << ".tmp" << std::hash<std::thread::id>{}(std::this_thread::get_id())
           << '.' << counter++;
  const fs::path tmp = dir_ / tmp_name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorCode::IoError, "cannot replace " + target.string() + ": " + ec.message());
  }
}

std::vector<std::string> ProjectFiles::list() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(dir_, ec)) {
    const std::string name = e.path().filename().string();
    if (is_project_document(name)) out.push_back(name);
  }
  std::sort(out.begin(), out.end());
  return out;
}

DesignProject ProjectFiles::load() const {
  DesignProject p;
  auto parse = [&](std::string_view doc) -> std::optional<json> {
    auto text = read(doc);
    if (!text) return std::nullopt;
    try {
      return json::parse(*text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::BadRequest, std::string(doc) + " is not valid JSON: " + e.what());
    }
  };
  if (auto j = parse("design_goal.json")) p.design_goal = design_goal_from_json(*j);
  if (auto j = parse("input_module.json")) p.input_module = input_module_from_json(*j);
  if (auto j = parse("output_module.json")) p.output_module = output_module_from_json(*j);
  if (auto j = parse("computation_module.json"))
    p.computation_module = computation_module_from_json(*j);
  return p;
}

ProjectStore::ProjectStore(fs::path root) : root_(std::move(root)) {}

namespace {

void check_project_name(std::string_view name) {
  static const std::regex re(R"(^[A-Za-z0-9_][A-Za-z0-9_.\-]{0,127}$)");
  const std::string s(name);
  if (!std::regex_match(s, re) || s.find("..") != std::string::npos)
    throw Error(ErrorCode::BadRequest, "invalid project name '" + s + "'");
}

}  // namespace

std::shared_ptr<ProjectFiles> ProjectStore::project(std::string_view name) {
  check_project_name(name);
  std::lock_guard lock(mutex_);
  auto it = projects_.find(name);
  if (it != projects_.end()) return it->second;
  auto files = std::make_shared<ProjectFiles>(root_ / std::string(name));
  projects_.emplace(std::string(name), files);
  return files;
}

bool ProjectStore::exists(std::string_view name) const {
  check_project_name(name);
  std::error_code ec;
  return fs::is_directory(root_ / std::string(name), ec);
}

}  // namespace fluidc
