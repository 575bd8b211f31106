#pragma once

// Manifest execution and the condition summary table.

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "skillevo/evolution.hpp"
#include "skillevo/manifest.hpp"

namespace skillevo {

// A scenario file, or a directory whose *.json scenarios are loaded in name order.
std::vector<Task> load_tasks(const std::filesystem::path& path);

struct RunOptions {
  std::vector<std::string> overrides;
  // Only runs with this condition are executed.
  std::optional<Condition> condition;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> output_root;
  // Concurrent task loops per manifest run.
  int task_parallelism = 1;
  bool replay = false;
};

// Builds the services for one manifest run.
using ServicesFactory = std::function<Services(const ExperimentManifest&, const RunConfig&)>;

// Scripted agent with the rule-based oracle and mutator.
ServicesFactory simulator_services();
// Chat agent, oracle and mutator over the manifest endpoint (or a rollout
// server when the manifest names one). Prompts come from `prompt_dir`.
ServicesFactory endpoint_services(std::filesystem::path prompt_dir);

struct TaskOutcome {
  std::string task_id;
  std::filesystem::path run_dir;
  int rollouts = 0;
  int passes = 0;
  std::vector<double> agent_q;  // AgentProgressQ of every evaluated candidate
  std::optional<std::string> error;
  std::size_t replay_diffs = 0;
  bool replay_survivors_match = true;
};

struct ConditionSummary {
  Condition condition = Condition::kC1;
  std::string label;
  bool ea_enabled = false;
  bool dense_feedback_enabled = false;
  int rollouts = 0;
  int passes = 0;
  int solved = 0;  // tasks with at least one passing rollout
  int tasks = 0;
  double pass_rate = 0.0;
  double agent_q = 0.0;
  std::vector<TaskOutcome> task_outcomes;

  int failures() const;
};

TaskOutcome summarize_history(const TaskHistory& history);
ConditionSummary summarize_condition(Condition condition, const RunConfig& config, std::vector<TaskOutcome> outcomes);

// Executes every selected manifest run. Throws InvalidConfig on config errors;
// task failures are recorded in the summaries.
std::vector<ConditionSummary> run_manifest(const ExperimentManifest& manifest, const RunOptions& options,
                                           const ServicesFactory& factory, std::ostream& log);

// Cfg | EA | Dense | Rollouts | Pass Rate | Solved/N | AgentQ
std::string format_summary_table(const std::vector<ConditionSummary>& rows);

}  // namespace skillevo
