#pragma once

// Pass-dominant survivor selection.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillevo/metrics.hpp"

namespace skillevo {

class SelectionError : public std::runtime_error {
 public:
  enum class Code { kMissingScore, kNoViableSurvivor };
  SelectionError(Code code, const std::string& message) : std::runtime_error(message), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

// Why a candidate carries B = 1.
enum class InvalidCause { kNone, kSanitizer, kSemanticFloor };

std::string_view to_string(InvalidCause cause);
InvalidCause parse_invalid_cause(std::string_view text);

struct CandidateEvaluation {
  std::string skill_id;
  int slot = 0;
  double pass_rate = 0.0;
  ProgressAggregate progress;
  double skill_q = 0.0;
  double skill_q_raw = 0.0;
  double robust_utility = 0.0;
  bool invalid = false;
  InvalidCause invalid_cause = InvalidCause::kNone;
  double select_q = 0.0;
};

inline constexpr double kInvalidSelectQ = -1.0;

double compute_epsilon(int repeats, int task_count);
double compute_robust_utility(double lcb, double mean_progress, double skill_q);

struct ValidityInput {
  bool sanitizer_valid = true;
  std::optional<double> skill_q;
  std::optional<double> parent_skill_q;
  bool is_carried_parent = false;
};

// B = 1 iff the sanitizer rejected the skill or skill_q + tau < parent skill_q.
InvalidCause apply_validity_gate(const ValidityInput& input, double tau);

double compute_select_q(const CandidateEvaluation& e, double epsilon);

struct CandidateInputs {
  std::string skill_id;
  int slot = 0;
  // Rollouts with progress components filled in.
  std::span<const RolloutRecord> rollouts;
  int repeats = 1;
  SkillScore skill;
  ValidityInput validity;
};

// PassRate, progress aggregate, robust utility, validity and SelectQ of one candidate.
CandidateEvaluation evaluate_candidate(const CandidateInputs& inputs, double tau, double epsilon);

// Argmax of select_q with ties broken by pass rate, then AgentVarianceQ, then
// lower slot. When every candidate is invalid the previous survivor is kept;
// without one that is a kNoViableSurvivor error.
std::string select_survivor(std::span<const CandidateEvaluation> evaluations,
                            const std::optional<std::string>& previous_survivor);

// Index form of select_survivor; nullopt means "fall back to the previous survivor".
std::optional<std::size_t> best_candidate(std::span<const CandidateEvaluation> evaluations);

}  // namespace skillevo
