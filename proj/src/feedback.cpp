#include "skillevo/feedback.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <regex>

#include "skillevo/text.hpp"

namespace skillevo {
namespace {

constexpr std::size_t kMaxSummaryLines = 6;

const std::regex& tally_re() {
  static const std::regex re(R"(TESTS=(\d+)\s+PASS=(\d+)\s+FAIL=(\d+))");
  return re;
}

const std::regex& failed_of_re() {
  static const std::regex re(R"(Failed (\d+) of (\d+) tests)");
  return re;
}

bool whitelisted(const std::string& line) {
  static const std::vector<std::regex> kPatterns = {
      std::regex(R"(^TESTS=\d+ PASS=\d+ FAIL=\d+$)"),
      std::regex(R"(^(SystemExit: )?ERROR: Failed \d+ of \d+ tests$)"),
      std::regex(R"(^[A-Za-z]+(Error|Exit|Exception): [^/\\]{1,160}$)"),
      std::regex(R"(^[A-Z][A-Z0-9_]*=\d+$)"),
  };
  return std::any_of(kPatterns.begin(), kPatterns.end(),
                     [&](const std::regex& re) { return std::regex_match(line, re); });
}

bool mentions_container(const std::string& line) {
  return contains_icase(line, "docker") || contains_icase(line, "container") || contains_icase(line, "compose");
}

bool is_compile_failure(const std::string& log) {
  return contains_icase(log, "COMPILE ERROR") || contains_icase(log, "syntax error") ||
         contains_icase(log, "compilation failed") || contains_icase(log, "elaboration failed");
}

std::string hint_for(const FeedbackObservation& obs) {
  switch (obs.mode) {
    case FeedbackMode::kPass:
      return "Hidden tests pass on this snapshot; keep the change set minimal and finish.";
    case FeedbackMode::kFailCompile:
      return "The verifier could not build the design; make sure every required source compiles together "
             "and module and port names match the task.";
    case FeedbackMode::kFailSimulation:
      if (obs.tests_total && obs.tests_failed) {
        return fmt::format(
            "{} of {} hidden tests failed in simulation; re-check the functional behavior of the edited target "
            "against the task description.",
            *obs.tests_failed, *obs.tests_total);
      }
      return "Hidden tests failed in simulation; re-check the functional behavior of the edited target.";
    case FeedbackMode::kFailTimeout:
      return "The verifier run timed out; look for missing reset, clock or termination behavior.";
    case FeedbackMode::kFailInfra:
      return "The verifier did not return a usable result; retry after another real code change.";
  }
  return {};
}

}  // namespace

std::string_view to_string(FeedbackMode mode) {
  switch (mode) {
    case FeedbackMode::kPass: return "pass";
    case FeedbackMode::kFailCompile: return "fail:compile";
    case FeedbackMode::kFailSimulation: return "fail:simulation_or_assertion";
    case FeedbackMode::kFailTimeout: return "fail:timeout";
    case FeedbackMode::kFailInfra: return "fail:infra";
  }
  return "fail:infra";
}

FeedbackMode parse_feedback_mode(std::string_view text) {
  for (auto mode : {FeedbackMode::kPass, FeedbackMode::kFailCompile, FeedbackMode::kFailSimulation,
                    FeedbackMode::kFailTimeout, FeedbackMode::kFailInfra}) {
    if (to_string(mode) == text) return mode;
  }
  throw std::invalid_argument("unknown feedback mode: " + std::string(text));
}

std::string_view to_string(FeedbackRefusal refusal) {
  switch (refusal) {
    case FeedbackRefusal::kFeatureDisabled: return "FeatureDisabled";
    case FeedbackRefusal::kBudgetExhausted: return "BudgetExhausted";
    case FeedbackRefusal::kNoEditYet: return "NoEditYet";
    case FeedbackRefusal::kNoSuccessfulCompile: return "NoSuccessfulCompile";
    case FeedbackRefusal::kNoChangeSinceLastCall: return "NoChangeSinceLastCall";
  }
  return "FeatureDisabled";
}

std::string refusal_message(FeedbackRefusal refusal) {
  switch (refusal) {
    case FeedbackRefusal::kFeatureDisabled: return "verify_feedback is not available in this run.";
    case FeedbackRefusal::kBudgetExhausted: return "verify_feedback budget exhausted for this rollout.";
    case FeedbackRefusal::kNoEditYet: return "verify_feedback requires a visible code edit first.";
    case FeedbackRefusal::kNoSuccessfulCompile: return "verify_feedback requires a successful visible compile first.";
    case FeedbackRefusal::kNoChangeSinceLastCall:
      return "verify_feedback requires a code change since the previous call.";
  }
  return {};
}

FeedbackResult request_feedback(FeedbackSession& session, std::string_view /*reason*/, const Environment& env,
                                const Workspace& live) {
  if (!session.enabled) return FeedbackRefusal::kFeatureDisabled;
  if (session.calls_used >= session.budget) return FeedbackRefusal::kBudgetExhausted;
  if (!session.has_visible_edit) return FeedbackRefusal::kNoEditYet;
  if (!session.has_successful_compile) return FeedbackRefusal::kNoSuccessfulCompile;
  std::string digest = live.digest();
  if (session.last_feedback_workspace_hash == digest) return FeedbackRefusal::kNoChangeSinceLastCall;

  auto raw = env.run_hidden_verifier(live);
  auto observation = sanitize_verifier_output(raw, env.contract());
  ++session.calls_used;
  session.last_feedback_workspace_hash = std::move(digest);
  return observation;
}

FeedbackObservation sanitize_verifier_output(const RawVerifierBundle& raw, const VisibilityContract& contract) {
  FeedbackObservation obs;
  obs.exit_code = raw.exit_code;

  std::optional<std::pair<int, int>> tally;  // total, failed
  std::smatch m;
  for (const auto& line : split_lines(raw.log)) {
    if (std::regex_search(line, m, tally_re())) {
      tally = {std::stoi(m[1].str()), std::stoi(m[3].str())};
    } else if (!tally && std::regex_search(line, m, failed_of_re())) {
      tally = {std::stoi(m[2].str()), std::stoi(m[1].str())};
    }
  }
  if (tally && tally->second > tally->first) tally.reset();

  if (raw.timed_out || contains_icase(raw.log, "TIMEOUT") || contains_icase(raw.log, "timed out")) {
    obs.mode = FeedbackMode::kFailTimeout;
    obs.phase = Phase::kTested;
  } else if (is_compile_failure(raw.log)) {
    obs.mode = FeedbackMode::kFailCompile;
    obs.phase = Phase::kEdited;
    tally.reset();
  } else if (tally) {
    obs.mode = tally->second == 0 && raw.exit_code == 0 ? FeedbackMode::kPass : FeedbackMode::kFailSimulation;
    obs.phase = Phase::kTested;
  } else {
    obs.mode = FeedbackMode::kFailInfra;
    obs.phase = Phase::kNone;
  }
  if (tally && obs.mode != FeedbackMode::kFailInfra) {
    obs.tests_total = tally->first;
    obs.tests_failed = tally->second;
  }

  std::vector<std::string> kept;
  if (obs.mode != FeedbackMode::kFailInfra) {
    for (const auto& raw_line : split_lines(raw.log)) {
      const std::string line = trim(raw_line);
      if (!whitelisted(line) || mentions_container(line)) continue;
      const bool leaks = std::any_of(contract.hidden_identifiers.begin(), contract.hidden_identifiers.end(),
                                     [&](const std::string& id) { return contains_icase(line, id); });
      if (!leaks) kept.push_back(line);
    }
  }
  if (kept.size() > kMaxSummaryLines) kept.erase(kept.begin(), kept.end() - kMaxSummaryLines);
  obs.summary_lines = std::move(kept);
  obs.next_focus_hint = hint_for(obs);

  // Final guard: templated text must not collide with an identifier either.
  obs.next_focus_hint = scrub(obs.next_focus_hint, contract.hidden_identifiers);
  for (auto& line : obs.summary_lines) line = scrub(line, contract.hidden_identifiers);
  return obs;
}

std::vector<std::string> observation_strings(const FeedbackObservation& obs) {
  std::vector<std::string> out = obs.summary_lines;
  out.push_back(obs.next_focus_hint);
  out.emplace_back(to_string(obs.mode));
  out.emplace_back(phase_label(obs.phase));
  return out;
}

Json to_json(const FeedbackObservation& obs) {
  Json j = {{"final_mode", to_string(obs.mode)},
            {"phase", phase_label(obs.phase)},
            {"next_focus_hint", obs.next_focus_hint},
            {"exit_code", obs.exit_code},
            {"summary_lines", obs.summary_lines}};
  if (obs.tests_total) j["tests_total"] = *obs.tests_total;
  if (obs.tests_failed) j["tests_failed"] = *obs.tests_failed;
  return j;
}

FeedbackObservation observation_from_json(const Json& j) {
  FeedbackObservation obs;
  obs.mode = parse_feedback_mode(j.at("final_mode").get<std::string>());
  obs.phase = parse_phase(j.at("phase").get<std::string>());
  obs.next_focus_hint = j.at("next_focus_hint").get<std::string>();
  obs.exit_code = j.at("exit_code").get<int>();
  obs.summary_lines = j.at("summary_lines").get<std::vector<std::string>>();
  if (j.contains("tests_total")) obs.tests_total = j["tests_total"].get<int>();
  if (j.contains("tests_failed")) obs.tests_failed = j["tests_failed"].get<int>();
  return obs;
}

}  // namespace skillevo
