#pragma once

// Experiment manifests and run configuration files.
//
// A run configuration is a flat YAML mapping whose keys are the RunConfig
// field names. A manifest is a JSON document:
//
//   {
//     "output_root": "runs/c4",
//     "seed_skill": "../skills/seed/default.md",
//     "endpoint": {"base_url": "...", "model": "...", "temperature": 0.2},
//     "rollout_server": "http://host:port",
//     "runs": [{"task": "../scenarios/rtl_crc8.json", "config": "../configs/c4.yml", "condition": "C4"}]
//   }
//
// Relative paths resolve against the manifest's directory. "task" may name a
// directory, which expands to every scenario in it.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skillevo/core.hpp"

namespace skillevo {

enum class Condition { kC1, kC2, kC3, kC4 };

std::string_view to_string(Condition condition);
// Throws InvalidConfig for anything but C1..C4.
Condition parse_condition(std::string_view text);

struct ConditionFlags {
  bool ea_enabled = false;
  bool dense_feedback_enabled = false;

  bool operator==(const ConditionFlags&) const = default;
};

ConditionFlags condition_flags(Condition condition);
Condition condition_for(const ConditionFlags& flags);

// Throws InvalidConfig when the config's flags disagree with the condition.
void check_condition(const RunConfig& config, Condition condition);

RunConfig parse_run_config_yaml(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// "key=value" with a RunConfig field name; throws InvalidConfig.
void apply_override(RunConfig& config, std::string_view assignment);

struct EndpointConfig {
  std::string base_url;
  std::string model;
  double temperature = 0.2;
  int max_tokens = 2048;
  int timeout_seconds = 120;
  // Extra attempts after a transport failure.
  int retries = 1;
};

struct ManifestRun {
  std::filesystem::path task;
  std::filesystem::path config;
  Condition condition = Condition::kC1;
  std::optional<std::filesystem::path> seed_skill;
};

struct ExperimentManifest {
  std::filesystem::path output_root;
  std::filesystem::path seed_skill;
  std::optional<EndpointConfig> endpoint;
  std::optional<std::string> rollout_server;
  std::vector<ManifestRun> runs;
};

ExperimentManifest parse_manifest(const Json& doc, const std::filesystem::path& base_dir);
ExperimentManifest load_manifest(const std::filesystem::path& path);

}  // namespace skillevo
