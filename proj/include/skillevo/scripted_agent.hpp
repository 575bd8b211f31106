#pragma once

// Deterministic agent policies over the simulator, used for testing the loop
// without a model.

#include <deque>
#include <set>

#include "skillevo/harness.hpp"
#include "skillevo/simulator.hpp"
#include "skillevo/text.hpp"

namespace skillevo {

enum class ScriptedPolicy {
  // Inspect, write the target using whatever fixes the skill teaches, compile,
  // simulate, then use feedback (when allowed) to discover missing fixes.
  kSolve,
  // Write the known-good content directly.
  kGolden,
  // Only read files until the turn cap.
  kReadOnly,
};

class ScriptedAgent final : public Agent {
 public:
  explicit ScriptedAgent(ScriptedPolicy policy = ScriptedPolicy::kSolve, const Matcher& matcher = default_matcher())
      : policy_(policy), matcher_(&matcher) {}

  void begin(const AgentSetup& setup) override;
  AgentAction next_action(const AgentTurn& turn) override;

 private:
  enum class Stage { kLocal, kFeedback, kWrapUp };

  void plan_opening();
  void plan_fix(const Fix& fix, bool then_simulate);
  const Fix* discover(DiscoveryChannel channel);
  void react(const ToolEvent& last);
  void wrap_up();
  bool skill_teaches(const Fix& fix) const;

  ScriptedPolicy policy_;
  const Matcher* matcher_;
  const Scenario* scenario_ = nullptr;
  std::string body_;
  bool feedback_allowed_ = false;
  SplitMix rng_{0};
  std::deque<AgentAction> queue_;
  std::set<std::string> applied_;
  Stage stage_ = Stage::kLocal;
  int speculative_edits_ = 0;
  std::size_t read_cursor_ = 0;
};

AgentFactory scripted_agent_factory(ScriptedPolicy policy = ScriptedPolicy::kSolve);

}  // namespace skillevo
