#pragma once

// One agent rollout: turn loop, tool dispatch, feedback wiring and the single
// final verification.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skillevo/feedback.hpp"

namespace skillevo {

// Mutable state a tool handler may touch during a rollout.
struct ToolContext {
  const Environment& env;
  const Workspace& initial;
  Workspace& workspace;
  FeedbackSession& feedback;
};

struct ToolCallResult {
  ToolOutput output;
  std::vector<std::string> files_written;
};

using ToolHandler = std::function<ToolCallResult(ToolContext&, const Json& arguments)>;

struct ToolSpec {
  ToolKind kind = ToolKind::kOther;
  // Argument names with a JSON type label, advertised to model agents.
  Json argument_schema = Json::object();
  std::string description;
  ToolHandler handler;
};

class ToolRegistry {
 public:
  // The fixed tool set; verify_feedback is registered only when dense feedback is on.
  static ToolRegistry standard(bool dense_feedback_enabled);

  void add(std::string name, ToolSpec spec);
  bool contains(const std::string& name) const { return entries_.contains(name); }
  const ToolSpec& at(const std::string& name) const;
  std::vector<std::string> names() const;
  const std::map<std::string, ToolSpec>& entries() const { return entries_; }

 private:
  std::map<std::string, ToolSpec> entries_;
};

// Contract for one run: the environment's contract with verify_feedback
// allowed exactly when dense feedback is enabled.
VisibilityContract execution_contract(const Environment& env, bool dense_feedback_enabled);

struct AgentAction {
  std::string tool;
  Json arguments = Json::object();
  std::string note;
};

// What an agent sees before choosing its next action.
struct AgentTurn {
  int turn = 1;
  int turn_cap = 30;
  // Result of the previous action; absent on the first turn.
  std::optional<ToolEvent> last_event;
  // Untruncated text output of the previous action.
  std::string last_output;
};

struct AgentSetup {
  const Task* task = nullptr;
  const Skill* skill = nullptr;
  const VisibilityContract* contract = nullptr;
  const ToolRegistry* tools = nullptr;
  int repeat_index = 0;
  std::uint64_t seed = 0;
};

class AgentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Agent {
 public:
  virtual ~Agent() = default;
  virtual void begin(const AgentSetup& setup) = 0;
  // Throws AgentError on transport or protocol failure.
  virtual AgentAction next_action(const AgentTurn& turn) = 0;
};

using AgentFactory = std::function<std::unique_ptr<Agent>(const Task&)>;

// Deterministic per-rollout seed: depends on the run seed, the task, the skill
// body and the repeat index only.
std::uint64_t rollout_seed(std::uint64_t run_seed, const Task& task, const Skill& skill, int repeat_index);

struct RolloutSettings {
  int turn_cap = 30;
  int feedback_budget = 3;
  bool dense_feedback_enabled = false;
  std::uint64_t seed = 0;
};

RolloutSettings rollout_settings(const RunConfig& config);

RolloutRecord run_rollout(const Task& task, const Skill& skill, Agent& agent, const RolloutSettings& settings,
                          int repeat_index);

}  // namespace skillevo
