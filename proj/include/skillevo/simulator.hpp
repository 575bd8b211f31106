#pragma once

// Deterministic stand-in for a hardware-design task with a hidden verifier.
//
// A scenario document describes the visible workspace, the file the agent must
// produce, and content predicates over workspace files. Compile succeeds when
// every target exists and its syntactic predicates hold. Local simulation
// checks the predicates marked `local`; the hidden verifier checks those marked
// `hidden` and reports one failing test per unmet predicate.
//
// Fixes describe how an agent can come to satisfy a predicate: each has a
// lesson sentence (what a skill would say), a code fragment inserted before the
// anchor line of the target, and the channel through which an agent without
// the lesson may discover it.

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "skillevo/environment.hpp"

namespace skillevo {

class ScenarioError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Predicate {
  std::string id;
  std::string path;
  std::vector<std::string> contains;
  bool syntactic = false;
  bool hidden = true;
  bool local = true;
};

enum class DiscoveryChannel { kCompile, kSimulate, kFeedback, kLessonOnly };

struct Fix {
  std::string id;
  std::string lesson;
  std::string path;
  std::string fragment;
  DiscoveryChannel discover = DiscoveryChannel::kLessonOnly;
  double probability = 0.0;
};

// A tempting wrong location: the agent may write a same-basename copy here.
struct Trap {
  std::string path;
  double probability = 0.0;
};

struct Scenario {
  std::string task_id;
  std::string category_id;
  std::string prompt;
  std::vector<WorkspaceFile> files;
  std::vector<std::string> target_paths;
  std::vector<std::string> shadow_paths;
  std::vector<std::string> hidden_identifiers;
  std::vector<std::string> unavailable_tools;
  WorkspaceFile base_edit;
  std::string anchor = "endmodule";
  std::vector<Predicate> predicates;
  std::vector<Fix> fixes;
  std::vector<Trap> traps;
};

Scenario parse_scenario(const Json& doc);
Scenario load_scenario(const std::filesystem::path& path);
std::vector<Scenario> load_scenarios(const std::filesystem::path& directory);

// Inserts `fragment` on its own line before the last occurrence of `anchor`,
// or appends it when the anchor is absent. Already-present fragments are kept once.
std::string insert_fragment(const std::string& content, const std::string& fragment, const std::string& anchor);

class SimulatedEnvironment final : public Environment {
 public:
  explicit SimulatedEnvironment(Scenario scenario);

  const Scenario& scenario() const { return scenario_; }

  const VisibilityContract& contract() const override { return contract_; }
  Workspace initial_workspace() const override { return Workspace(scenario_.files); }
  ToolOutput compile(const Workspace& workspace, const std::vector<std::string>& files) const override;
  ToolOutput simulate(const Workspace& workspace) const override;
  RawVerifierBundle run_hidden_verifier(Workspace private_copy) const override;

  bool predicate_holds(const Predicate& p, const Workspace& workspace) const;
  // Number of hidden predicates not satisfied by the workspace.
  int unmet_hidden(const Workspace& workspace) const;

 private:
  std::vector<std::string> syntax_errors(const Workspace& workspace, const std::vector<std::string>& files) const;

  Scenario scenario_;
  VisibilityContract contract_;
};

Task make_task(const Scenario& scenario);
Task make_task(std::shared_ptr<const SimulatedEnvironment> env);

// Tool names the harness registers; the simulator contract lists them.
const std::vector<std::string>& standard_tool_names();

}  // namespace skillevo
