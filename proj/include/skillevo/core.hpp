#pragma once

// Shared domain types for the skill-evolution orchestrator. Everything here is
// a plain value type; no I/O and no metric math.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace skillevo {

using Json = nlohmann::json;

class Environment;

// How far a rollout progressed. Ordered so that max() gives the furthest phase.
enum class Phase : int {
  kNone = 0,
  kInspected = 1,
  kEdited = 2,
  kCompiled = 3,
  kTested = 4,
};

// "P0-none" ... "P4-tested".
std::string_view phase_label(Phase phase);
// Accepts both "P4" and "P4-tested".
Phase parse_phase(std::string_view text);
inline int phase_index(Phase phase) { return static_cast<int>(phase); }

enum class ToolKind { kInspect, kEdit, kCompile, kSimulate, kFeedback, kFinalVerify, kOther };

std::string_view to_string(ToolKind kind);
ToolKind parse_tool_kind(std::string_view text);

struct ConfigViolation {
  std::string field;
  std::string reason;
};

class InvalidConfig : public std::invalid_argument {
 public:
  explicit InvalidConfig(std::vector<ConfigViolation> violations);

  const std::vector<ConfigViolation>& violations() const { return violations_; }
  // Field of the first violation.
  const std::string& field() const { return violations_.front().field; }

 private:
  std::vector<ConfigViolation> violations_;
};

struct RunConfig {
  int population_size = 4;  // K
  int generations = 5;      // G
  int repeats = 4;          // R
  int task_count = 1;       // N_task
  int turn_cap = 30;
  int feedback_budget = 3;
  double semantic_floor_tau = 0.05;
  bool dense_feedback_enabled = false;
  bool ea_enabled = true;
  double rollout_temperature = 0.2;
  double oracle_temperature = 0.0;
  double mutator_temperature = 0.35;
  std::uint64_t seed = 0;
  // Rollout fan-out within a generation; 1 selects the serial path.
  int parallelism = 1;

  bool operator==(const RunConfig&) const = default;
};

std::vector<ConfigViolation> check_run_config(const RunConfig& config);
// Returns the config unchanged, or throws InvalidConfig listing every violation.
RunConfig validate_run_config(RunConfig config);

struct WorkspaceFile {
  std::string path;
  std::string content;

  bool operator==(const WorkspaceFile&) const = default;
};

struct Task {
  std::string task_id;
  std::string category_id;
  std::string prompt;
  std::vector<WorkspaceFile> workspace;
  std::shared_ptr<const Environment> environment;
};

// Throws std::invalid_argument on an empty id, duplicate or absolute paths.
void validate_task(const Task& task);

enum class DirectiveTag { kKeep, kAdd, kRemoveCheck };

std::string_view to_string(DirectiveTag tag);
DirectiveTag parse_directive_tag(std::string_view text);

struct Directive {
  DirectiveTag tag = DirectiveTag::kAdd;
  std::string text;

  bool operator==(const Directive&) const = default;
};

enum class SkillOrigin { kSeed, kCarriedParent, kMutatedChild, kRepairedChild };

std::string_view to_string(SkillOrigin origin);
SkillOrigin parse_skill_origin(std::string_view text);

enum class Validity { kValid, kInvalid };

struct Skill {
  std::string skill_id;
  int generation = 0;
  int slot = 0;
  std::optional<std::string> parent_id;
  std::string body;
  std::vector<Directive> directives;
  SkillOrigin origin = SkillOrigin::kSeed;
  Validity validity = Validity::kValid;
  std::vector<std::string> invalid_reasons;

  bool valid() const { return validity == Validity::kValid; }
  bool operator==(const Skill&) const = default;
};

void validate_skill(const Skill& skill);

// Throws std::invalid_argument unless every parent chain ends at a seed
// without revisiting a skill. Skills are matched by id; duplicates of the same
// id (a carried parent re-materialized) must agree on parent_id.
void check_lineage(std::span<const Skill> skills);

std::string seed_skill_id(int slot = 0);
std::string individual_id(int generation, int slot);  // gen{g}_ind{i}
std::string child_id(int generation, int slot);       // child_gen{g}_{slot}

struct ToolEvent {
  int turn = 1;
  std::string tool_name;
  Json arguments = Json::object();
  std::string result_summary;
  std::vector<std::string> files_written;
  ToolKind kind = ToolKind::kOther;
  // For compile: the build succeeded. For simulate/verify_feedback: the run executed.
  bool succeeded = true;
  // The agent's stated reason for the call, if any.
  std::string note;
  // Structured tool result (test tallies, feedback observation, refusal code).
  Json details = Json::object();

  bool operator==(const ToolEvent&) const = default;
};

struct VerifierOutcome {
  bool passed = false;
  std::optional<int> tests_total;
  std::optional<int> tests_failed;
  Phase phase = Phase::kNone;
  int exit_code = 0;
  std::string sanitized_tail;
  bool infra_failure = false;

  bool operator==(const VerifierOutcome&) const = default;
};

void validate_outcome(const VerifierOutcome& outcome);

struct ProgressComponents {
  double verifier_progress = 0.0;  // V
  double execution_phase = 0.0;    // X
  double harness_alignment = 0.0;  // H
  double edit_quality = 0.0;       // E
  double efficiency = 0.0;         // eta
  double path_grounding = 0.0;     // P_path

  bool operator==(const ProgressComponents&) const = default;
};

struct RolloutRecord {
  std::string task_id;
  std::string skill_id;
  int repeat_index = 0;
  int turns_used = 0;
  std::vector<ToolEvent> events;
  int feedback_calls_used = 0;
  VerifierOutcome final_outcome;
  Phase phase_reached = Phase::kNone;
  ProgressComponents progress;
  bool infra_failure = false;

  bool operator==(const RolloutRecord&) const = default;
};

// P0 with no events, otherwise the furthest phase any event reached.
Phase derive_phase(std::span<const ToolEvent> events);

enum class LessonTag { kKeep, kAdd, kRemove };

std::string_view to_string(LessonTag tag);
LessonTag parse_lesson_tag(std::string_view text);

struct Lesson {
  LessonTag tag = LessonTag::kAdd;
  std::string text;
  int source_generation = 0;
  bool from_invalid_candidate = false;

  bool operator==(const Lesson&) const = default;
};

class LessonBank {
 public:
  const std::vector<Lesson>& entries() const { return entries_; }
  // Indices into entries().
  const std::vector<std::size_t>& critical_indices() const { return critical_; }

  std::vector<Lesson> critical_lessons() const;
  std::vector<Lesson> lessons_with(LessonTag tag) const;
  bool empty() const { return entries_.empty(); }

  // Adds the lesson unless an entry with the same tag and normalized text is
  // already present. Returns the entry index either way.
  std::size_t add(Lesson lesson);
  void mark_critical(std::size_t index);
  bool is_critical(std::size_t index) const;

  bool operator==(const LessonBank&) const = default;

 private:
  std::vector<Lesson> entries_;
  std::vector<std::size_t> critical_;
};

struct OracleSummary {
  int generation = 0;
  double best = 0.0;
  double mean = 0.0;
  double worst = 0.0;
  std::string rollup;
  std::vector<std::string> keep;
  std::vector<std::string> add;
  std::vector<std::string> remove;
  // Subset of keep/add lessons that later skills must retain.
  std::vector<std::string> critical;
  // Lessons whose only evidence came from invalid candidates.
  std::vector<std::string> from_invalid;

  bool operator==(const OracleSummary&) const = default;
};

struct MutationHandoff {
  int generation = 0;
  std::string survivor_id;
  double selection_delta = 0.0;
  double pass_delta = 0.0;
  double progress_delta = 0.0;
  std::string lesson_bank_ref;
  std::vector<std::string> keep;
  std::vector<std::string> add;
  std::vector<std::string> remove;
  std::vector<std::string> critical;

  bool effective() const { return selection_delta > 0.0; }
  bool operator==(const MutationHandoff&) const = default;
};

// Visibility and tool contract for one task run; persisted as execution_contract.json.
struct VisibilityContract {
  std::vector<std::string> allowed_tools;
  // Every tool name the sanitizer recognizes in skill text, allowed or not.
  std::vector<std::string> known_tools;
  std::vector<std::string> visible_paths;
  std::vector<std::string> hidden_identifiers;
  std::vector<std::string> target_paths;
  std::vector<std::string> shadow_paths;
  bool hidden_verifier_available = false;

  bool tool_allowed(std::string_view tool) const;
  bool path_visible(std::string_view path) const;
  bool operator==(const VisibilityContract&) const = default;
};

}  // namespace skillevo
