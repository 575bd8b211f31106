#include "skillevo/scripted_agent.hpp"

#include <fmt/format.h>

namespace skillevo {
namespace {

AgentAction action(std::string tool, Json args = Json::object(), std::string note = {}) {
  return {std::move(tool), std::move(args), std::move(note)};
}

std::optional<int> failed_count(const ToolEvent& e) {
  if (e.tool_name == "simulate" && e.details.contains("tests_failed")) return e.details["tests_failed"].get<int>();
  if (e.tool_name == "verify_feedback" && e.details.contains("observation")) {
    const auto& obs = e.details["observation"];
    if (obs.contains("tests_failed")) return obs["tests_failed"].get<int>();
  }
  return std::nullopt;
}

}  // namespace

void ScriptedAgent::begin(const AgentSetup& setup) {
  const auto* env = dynamic_cast<const SimulatedEnvironment*>(setup.task->environment.get());
  if (env == nullptr) throw AgentError("scripted agent requires a simulated environment");
  scenario_ = &env->scenario();
  body_ = setup.skill->body;
  feedback_allowed_ = setup.contract->tool_allowed("verify_feedback");
  rng_ = SplitMix(setup.seed);
  queue_.clear();
  applied_.clear();
  stage_ = Stage::kLocal;
  speculative_edits_ = 0;
  read_cursor_ = 0;
  if (policy_ != ScriptedPolicy::kReadOnly) plan_opening();
}

bool ScriptedAgent::skill_teaches(const Fix& fix) const { return matcher_->contains(body_, fix.lesson); }

void ScriptedAgent::plan_opening() {
  const auto& s = *scenario_;
  queue_.push_back(action("list_dir"));
  for (const auto& f : s.files) queue_.push_back(action("read_file", {{"path", f.path}}));

  const auto& target = s.base_edit.path;
  const bool guarded = contains_icase(body_, target) && contains_icase(body_, "exact");
  if (policy_ == ScriptedPolicy::kSolve) {
    for (const auto& trap : s.traps) {
      // Always draw so that the guard does not shift later random decisions.
      const bool fall = rng_.uniform() < trap.probability;
      if (fall && !guarded) {
        queue_.push_back(action("write_file", {{"path", trap.path}, {"content", s.base_edit.content}},
                                "Draft the module next to the other sources"));
        queue_.push_back(action("compile", {{"files", Json::array({trap.path})}}));
        queue_.push_back(action("simulate"));
      }
    }
  }

  std::string content = s.base_edit.content;
  for (const auto& fix : s.fixes) {
    if (fix.path != target) continue;
    if (policy_ == ScriptedPolicy::kGolden || skill_teaches(fix)) {
      content = insert_fragment(content, fix.fragment, s.anchor);
      applied_.insert(fix.id);
    }
  }
  queue_.push_back(action("write_file", {{"path", target}, {"content", content}},
                          fmt::format("Implement {} from the task description", target)));
  queue_.push_back(action("compile", {{"files", Json::array({target})}}));
  queue_.push_back(action("simulate"));
}

void ScriptedAgent::plan_fix(const Fix& fix, bool then_simulate) {
  applied_.insert(fix.id);
  queue_.push_back(action("edit_file",
                          {{"path", fix.path}, {"find", ""}, {"replace", fix.fragment}, {"anchor", scenario_->anchor}},
                          fix.lesson));
  queue_.push_back(action("compile", {{"files", Json::array({fix.path})}}));
  if (then_simulate) queue_.push_back(action("simulate"));
}

const Fix* ScriptedAgent::discover(DiscoveryChannel channel) {
  for (const auto& fix : scenario_->fixes) {
    if (fix.discover != channel || applied_.contains(fix.id)) continue;
    // One draw per opportunity, for the first undiscovered fix of the channel.
    if (rng_.uniform() < fix.probability) return &fix;
    return nullptr;
  }
  return nullptr;
}

void ScriptedAgent::wrap_up() {
  stage_ = Stage::kWrapUp;
  queue_.push_back(action("show_changes"));
  queue_.push_back(action("finish"));
}

void ScriptedAgent::react(const ToolEvent& last) {
  if (policy_ == ScriptedPolicy::kGolden) {
    wrap_up();
    return;
  }
  if (stage_ == Stage::kLocal) {
    const bool build_failed = (last.tool_name == "compile" || last.tool_name == "simulate") && !last.succeeded;
    if (build_failed) {
      if (const Fix* fix = discover(DiscoveryChannel::kCompile)) {
        plan_fix(*fix, true);
        return;
      }
    }
    if (last.tool_name == "simulate" && failed_count(last).value_or(0) > 0) {
      if (const Fix* fix = discover(DiscoveryChannel::kSimulate)) {
        plan_fix(*fix, true);
        return;
      }
    }
    if (!feedback_allowed_) {
      wrap_up();
      return;
    }
    stage_ = Stage::kFeedback;
    queue_.push_back(action("verify_feedback", {{"reason", "check the current design against the hidden tests"}}));
    return;
  }

  // Feedback stage: the last event is either a compile after an edit or a feedback call.
  if (last.tool_name == "compile") {
    queue_.push_back(action("verify_feedback", {{"reason", "re-check after the latest change"}}));
    return;
  }
  if (!last.succeeded || !last.details.contains("observation")) {
    wrap_up();
    return;
  }
  const auto obs = observation_from_json(last.details["observation"]);
  if (obs.mode == FeedbackMode::kPass) {
    wrap_up();
    return;
  }
  if (const Fix* fix = discover(DiscoveryChannel::kFeedback)) {
    plan_fix(*fix, false);
    return;
  }
  ++speculative_edits_;
  queue_.push_back(action("edit_file",
                          {{"path", scenario_->base_edit.path},
                           {"find", ""},
                           {"replace", fmt::format("  // revisit {}: {}", speculative_edits_, to_string(obs.mode))},
                           {"anchor", scenario_->anchor}},
                          "Annotate the suspicious region before another check"));
  queue_.push_back(action("compile", {{"files", Json::array({scenario_->base_edit.path})}}));
}

AgentAction ScriptedAgent::next_action(const AgentTurn& turn) {
  if (policy_ == ScriptedPolicy::kReadOnly) {
    const auto& files = scenario_->files;
    if (files.empty()) return action("list_dir");
    return action("read_file", {{"path", files[read_cursor_++ % files.size()].path}});
  }
  if (queue_.empty() && turn.last_event) react(*turn.last_event);
  if (queue_.empty()) wrap_up();
  AgentAction next = std::move(queue_.front());
  queue_.pop_front();
  return next;
}

AgentFactory scripted_agent_factory(ScriptedPolicy policy) {
  return [policy](const Task&) { return std::make_unique<ScriptedAgent>(policy); };
}

}  // namespace skillevo
