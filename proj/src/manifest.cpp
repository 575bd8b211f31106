#include "skillevo/manifest.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <sstream>

#include "skillevo/serialization.hpp"
#include "skillevo/text.hpp"

namespace skillevo {
namespace {

namespace fs = std::filesystem;

[[noreturn]] void reject(std::string field, std::string reason) {
  throw InvalidConfig(std::vector<ConfigViolation>{{std::move(field), std::move(reason)}});
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) reject(std::string(key), fmt::format("not a number: {}", text));
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string t = normalize_text(text);
  if (t == "true" || t == "yes" || t == "on" || t == "1") return true;
  if (t == "false" || t == "no" || t == "off" || t == "0") return false;
  reject(std::string(key), fmt::format("not a boolean: {}", text));
}

// Assigns one scalar field by name; unknown names are rejected.
void assign_field(RunConfig& c, std::string_view key, std::string_view value) {
  if (key == "population_size" || key == "K") c.population_size = parse_number<int>(key, value);
  else if (key == "generations" || key == "G") c.generations = parse_number<int>(key, value);
  else if (key == "repeats" || key == "R") c.repeats = parse_number<int>(key, value);
  else if (key == "task_count" || key == "N_task") c.task_count = parse_number<int>(key, value);
  else if (key == "turn_cap") c.turn_cap = parse_number<int>(key, value);
  else if (key == "feedback_budget") c.feedback_budget = parse_number<int>(key, value);
  else if (key == "semantic_floor_tau" || key == "tau") c.semantic_floor_tau = parse_number<double>(key, value);
  else if (key == "dense_feedback_enabled") c.dense_feedback_enabled = parse_bool(key, value);
  else if (key == "ea_enabled") c.ea_enabled = parse_bool(key, value);
  else if (key == "rollout_temperature") c.rollout_temperature = parse_number<double>(key, value);
  else if (key == "oracle_temperature") c.oracle_temperature = parse_number<double>(key, value);
  else if (key == "mutator_temperature") c.mutator_temperature = parse_number<double>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "parallelism") c.parallelism = parse_number<int>(key, value);
  else reject(std::string(key), "unknown configuration key");
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

std::string_view to_string(Condition condition) {
  switch (condition) {
    case Condition::kC1: return "C1";
    case Condition::kC2: return "C2";
    case Condition::kC3: return "C3";
    case Condition::kC4: return "C4";
  }
  return "C1";
}

Condition parse_condition(std::string_view text) {
  if (text == "C1") return Condition::kC1;
  if (text == "C2") return Condition::kC2;
  if (text == "C3") return Condition::kC3;
  if (text == "C4") return Condition::kC4;
  reject("condition", fmt::format("unknown condition {}", text));
}

ConditionFlags condition_flags(Condition condition) {
  switch (condition) {
    case Condition::kC1: return {false, false};
    case Condition::kC2: return {false, true};
    case Condition::kC3: return {true, false};
    case Condition::kC4: return {true, true};
  }
  return {};
}

Condition condition_for(const ConditionFlags& flags) {
  if (flags.ea_enabled) return flags.dense_feedback_enabled ? Condition::kC4 : Condition::kC3;
  return flags.dense_feedback_enabled ? Condition::kC2 : Condition::kC1;
}

void check_condition(const RunConfig& config, Condition condition) {
  const auto want = condition_flags(condition);
  std::vector<ConfigViolation> violations;
  if (config.ea_enabled != want.ea_enabled) {
    violations.push_back({"ea_enabled", fmt::format("{} requires ea_enabled={}", to_string(condition), want.ea_enabled)});
  }
  if (config.dense_feedback_enabled != want.dense_feedback_enabled) {
    violations.push_back({"dense_feedback_enabled", fmt::format("{} requires dense_feedback_enabled={}",
                                                                to_string(condition), want.dense_feedback_enabled)});
  }
  if (!violations.empty()) throw InvalidConfig(std::move(violations));
}

RunConfig parse_run_config_yaml(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    reject("config", fmt::format("malformed YAML: {}", e.what()));
  }
  RunConfig config;
  if (root.IsNull()) return validate_run_config(config);
  if (!root.IsMap()) reject("config", "expected a mapping");
  for (const auto& kv : root) {
    const auto key = kv.first.as<std::string>();
    if (!kv.second.IsScalar()) reject(key, "expected a scalar value");
    assign_field(config, key, kv.second.Scalar());
  }
  return validate_run_config(config);
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) reject("config", "cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config_yaml(buffer.str());
}

void apply_override(RunConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) reject("override", fmt::format("expected key=value, got {}", assignment));
  RunConfig updated = config;
  assign_field(updated, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
  config = validate_run_config(updated);
}

ExperimentManifest parse_manifest(const Json& doc, const fs::path& base_dir) {
  ExperimentManifest m;
  try {
    m.output_root = resolve(base_dir, doc.value("output_root", "runs"));
    m.seed_skill = resolve(base_dir, doc.value("seed_skill", "../skills/seed/default.md"));
    if (doc.contains("endpoint")) {
      const auto& e = doc.at("endpoint");
      EndpointConfig ep;
      ep.base_url = e.at("base_url");
      ep.model = e.at("model");
      ep.temperature = e.value("temperature", 0.2);
      ep.max_tokens = e.value("max_tokens", 2048);
      ep.timeout_seconds = e.value("timeout_seconds", 120);
      ep.retries = e.value("retries", 1);
      if (ep.temperature < 0.0 || ep.temperature > 2.0) reject("endpoint.temperature", "must lie in [0,2]");
      if (ep.retries < 0 || ep.retries > 1) reject("endpoint.retries", "at most one retry is supported");
      m.endpoint = ep;
    }
    if (doc.contains("rollout_server")) m.rollout_server = doc.at("rollout_server").get<std::string>();
    for (const auto& r : doc.at("runs")) {
      ManifestRun run;
      run.task = resolve(base_dir, r.at("task"));
      run.config = resolve(base_dir, r.at("config"));
      run.condition = parse_condition(r.at("condition").get<std::string>());
      if (r.contains("seed_skill")) run.seed_skill = resolve(base_dir, r.at("seed_skill"));
      m.runs.push_back(std::move(run));
    }
  } catch (const Json::exception& e) {
    reject("manifest", e.what());
  }
  if (m.runs.empty()) reject("runs", "manifest lists no runs");
  return m;
}

ExperimentManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) reject("manifest", "cannot read " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::exception& e) {
    reject("manifest", e.what());
  }
  return parse_manifest(doc, path.parent_path());
}

}  // namespace skillevo
