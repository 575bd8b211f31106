#pragma once

// Runtime dense-feedback policy: the `verify_feedback` tool runs the hidden
// verifier on a private workspace copy and returns only a bounded, sanitized
// observation. It never counts as final correctness.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "skillevo/environment.hpp"

namespace skillevo {

enum class FeedbackMode { kPass, kFailCompile, kFailSimulation, kFailTimeout, kFailInfra };

std::string_view to_string(FeedbackMode mode);
FeedbackMode parse_feedback_mode(std::string_view text);

struct FeedbackObservation {
  FeedbackMode mode = FeedbackMode::kFailInfra;
  Phase phase = Phase::kNone;
  std::optional<int> tests_total;
  std::optional<int> tests_failed;
  std::string next_focus_hint;
  int exit_code = 0;
  // Whitelisted verifier lines (test tallies, one-line exception summaries).
  std::vector<std::string> summary_lines;

  bool operator==(const FeedbackObservation&) const = default;
};

enum class FeedbackRefusal { kFeatureDisabled, kBudgetExhausted, kNoEditYet, kNoSuccessfulCompile, kNoChangeSinceLastCall };

std::string_view to_string(FeedbackRefusal refusal);
// Message shown to the agent as the tool result.
std::string refusal_message(FeedbackRefusal refusal);

struct FeedbackSession {
  bool enabled = false;
  int budget = 3;
  int calls_used = 0;
  std::optional<std::string> last_feedback_workspace_hash;
  bool has_visible_edit = false;
  bool has_successful_compile = false;

  void record_edit() { has_visible_edit = true; }
  void record_compile(bool ok) { has_successful_compile = has_successful_compile || ok; }
};

using FeedbackResult = std::variant<FeedbackObservation, FeedbackRefusal>;

// Refusals do not consume budget.
FeedbackResult request_feedback(FeedbackSession& session, std::string_view reason, const Environment& env,
                                const Workspace& live);

FeedbackObservation sanitize_verifier_output(const RawVerifierBundle& raw, const VisibilityContract& contract);

// Every string the observation exposes, for leak checks.
std::vector<std::string> observation_strings(const FeedbackObservation& obs);

Json to_json(const FeedbackObservation& obs);
FeedbackObservation observation_from_json(const Json& j);

}  // namespace skillevo
