#pragma once

// The generation update: evaluate the population, select a survivor, summarize
// the evidence into lessons, mutate and repair children, gate them on health,
// and carry the survivor into the next population at slot 0.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skillevo/executor.hpp"
#include "skillevo/mutator.hpp"
#include "skillevo/oracle.hpp"
#include "skillevo/sanitizer.hpp"
#include "skillevo/telemetry.hpp"

namespace skillevo {

// How a skill's SkillQ was scored when it entered a population. Persisted so
// that replay can recompute the same components.
struct ScoringRecord {
  int created_generation = 0;
  std::optional<std::string> parent_id;
  // Set for parent copies, which inherit the survivor's components.
  std::optional<std::string> copied_from;
  std::vector<std::string> oracle_directives;
  bool sanitizer_valid = true;
  bool sanitizer_repaired = false;

  bool operator==(const ScoringRecord&) const = default;
};

struct Member {
  Skill skill;
  SkillComponents components;
  SkillScore score;
  ScoringRecord scoring;
  // SkillQ of the survivor this child was derived from.
  std::optional<double> parent_skill_q;
  // Carried survivor or parent copy; exempt from the semantic floor.
  bool carried = false;
};

struct GenerationRecord {
  int generation = 0;
  std::string task_id;
  std::vector<Member> population;
  std::vector<CandidateEvaluation> evaluations;
  // K*R records, grouped by slot then repeat.
  std::vector<RolloutRecord> rollouts;
  std::string survivor_id;
  std::size_t survivor_index = 0;
  OracleSummary oracle_summary;
  std::optional<MutationHandoff> handoff;
  LessonBank lesson_bank_after;
  bool summarized = false;
};

struct Services {
  std::shared_ptr<RolloutExecutor> executor;
  std::shared_ptr<Oracle> oracle;
  std::shared_ptr<Mutator> mutator;
  std::shared_ptr<const ProgressEstimator> progress_estimator = std::make_shared<TraceRubricEstimator>();
  std::shared_ptr<const SkillEstimator> skill_estimator = std::make_shared<TextRubricSkillEstimator>();
  const Matcher* matcher = &default_matcher();
};

// Simulator executor plus rule-based oracle and mutator.
Services rule_based_services(AgentFactory agent_factory, int parallelism);

// State of one task-local loop.
struct LoopContext {
  const Task* task = nullptr;
  RunConfig config;
  Services* services = nullptr;
  // Null disables artifact writing.
  RunDirectory* run = nullptr;
  VisibilityContract contract;
  LessonBank bank;
};

LoopContext make_loop_context(const Task& task, const RunConfig& config, Services& services, RunDirectory* run);

// Slot 0 is the sanitized seed; slots 1..K-1 are children of the seed (or just
// the seed when EA is disabled).
std::vector<Member> initial_population(const Skill& seed, LoopContext& ctx);

GenerationRecord run_generation(int generation, std::vector<Member> population, LoopContext& ctx);

// Oracle, lesson-bank update and artifacts; idempotent per record.
void summarize_generation(GenerationRecord& record, LoopContext& ctx);

std::vector<Member> build_next_population(GenerationRecord& record, LoopContext& ctx);

struct TaskHistory {
  std::string task_id;
  std::vector<GenerationRecord> generations;
  std::optional<Skill> final_survivor;
  std::optional<std::string> error;
};

TaskHistory run_task(const Task& task, const Skill& seed, const RunConfig& config, Services& services,
                     const std::optional<std::filesystem::path>& run_root, const std::string& condition = "custom");

// Independent task-wise loops. Run directories go to <output_root>/<task_id>
// when an output root is given.
std::vector<TaskHistory> run_experiment(const std::vector<Task>& tasks, const std::vector<Skill>& seeds,
                                        const RunConfig& config, Services& services,
                                        const std::optional<std::filesystem::path>& output_root,
                                        const std::string& condition = "custom");

Skill make_seed_skill(std::string body);

Json to_json(const ScoringRecord& s);
ScoringRecord scoring_from_json(const Json& j);

}  // namespace skillevo
