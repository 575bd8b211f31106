#include "skillevo/selection.hpp"

#include <algorithm>

namespace skillevo {

std::string_view to_string(InvalidCause cause) {
  switch (cause) {
    case InvalidCause::kNone: return "none";
    case InvalidCause::kSanitizer: return "sanitizer";
    case InvalidCause::kSemanticFloor: return "semantic_floor";
  }
  return "none";
}

InvalidCause parse_invalid_cause(std::string_view text) {
  if (text == "none") return InvalidCause::kNone;
  if (text == "sanitizer") return InvalidCause::kSanitizer;
  if (text == "semantic_floor") return InvalidCause::kSemanticFloor;
  throw std::invalid_argument("unknown invalid cause: " + std::string(text));
}

double compute_epsilon(int repeats, int task_count) {
  return 0.49 / static_cast<double>(std::max({repeats, task_count, 1}));
}

double compute_robust_utility(double lcb, double mean_progress, double skill_q) {
  for (double v : {lcb, mean_progress, skill_q}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw MetricError(MetricError::Code::kComponentOutOfRange, "robust utility input outside [0,1]");
    }
  }
  return clip01(0.60 * lcb + 0.20 * mean_progress + 0.20 * skill_q);
}

InvalidCause apply_validity_gate(const ValidityInput& in, double tau) {
  if (!in.sanitizer_valid) return InvalidCause::kSanitizer;
  if (in.is_carried_parent) return InvalidCause::kNone;
  if (!in.skill_q || !in.parent_skill_q) {
    throw SelectionError(SelectionError::Code::kMissingScore, "validity gate needs both skill scores");
  }
  return *in.skill_q + tau < *in.parent_skill_q ? InvalidCause::kSemanticFloor : InvalidCause::kNone;
}

double compute_select_q(const CandidateEvaluation& e, double epsilon) {
  if (e.invalid) return kInvalidSelectQ;
  return e.pass_rate + epsilon * clip01(e.robust_utility);
}

CandidateEvaluation evaluate_candidate(const CandidateInputs& in, double tau, double epsilon) {
  CandidateEvaluation e;
  e.skill_id = in.skill_id;
  e.slot = in.slot;
  std::vector<VerifierOutcome> outcomes;
  std::vector<double> scores;
  for (const auto& r : in.rollouts) {
    outcomes.push_back(r.final_outcome);
    scores.push_back(compute_progress(r.progress));
  }
  e.pass_rate = compute_pass_rate(outcomes);
  e.progress = aggregate_progress(scores, in.repeats);
  e.skill_q = in.skill.gated;
  e.skill_q_raw = in.skill.raw;
  e.robust_utility = compute_robust_utility(e.progress.lcb, e.progress.mean, e.skill_q);
  e.invalid_cause = apply_validity_gate(in.validity, tau);
  e.invalid = e.invalid_cause != InvalidCause::kNone;
  e.select_q = compute_select_q(e, epsilon);
  return e;
}

std::optional<std::size_t> best_candidate(std::span<const CandidateEvaluation> evaluations) {
  std::optional<std::size_t> best;
  auto better = [](const CandidateEvaluation& a, const CandidateEvaluation& b) {
    if (a.select_q != b.select_q) return a.select_q > b.select_q;
    if (a.pass_rate != b.pass_rate) return a.pass_rate > b.pass_rate;
    if (a.progress.agent_variance_q != b.progress.agent_variance_q) {
      return a.progress.agent_variance_q > b.progress.agent_variance_q;
    }
    return a.slot < b.slot;
  };
  for (std::size_t i = 0; i < evaluations.size(); ++i) {
    if (evaluations[i].invalid) continue;
    if (!best || better(evaluations[i], evaluations[*best])) best = i;
  }
  return best;
}

std::string select_survivor(std::span<const CandidateEvaluation> evaluations,
                            const std::optional<std::string>& previous_survivor) {
  if (evaluations.empty()) {
    throw SelectionError(SelectionError::Code::kNoViableSurvivor, "no candidates to select from");
  }
  if (auto best = best_candidate(evaluations)) return evaluations[*best].skill_id;
  if (previous_survivor) return *previous_survivor;
  throw SelectionError(SelectionError::Code::kNoViableSurvivor,
                       "every candidate is invalid and there is no previous survivor");
}

}  // namespace skillevo
