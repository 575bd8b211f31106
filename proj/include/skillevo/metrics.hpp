#pragma once

// Dense scoring: PassRate, SkillQ, per-rollout progress, repeat aggregation,
// AgentVarianceQ and pass/fail calibration. All formulas clip their result to
// [0,1]; component inputs outside [0,1] are rejected.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillevo/core.hpp"
#include "skillevo/text.hpp"

namespace skillevo {

class MetricError : public std::invalid_argument {
 public:
  enum class Code { kEmptyInput, kLengthMismatch, kComponentOutOfRange, kNegativeSigma, kDegenerateInput, kIncompleteRollout };

  MetricError(Code code, const std::string& message) : std::invalid_argument(message), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

struct SkillComponents {
  double lesson_coverage = 0.0;      // L
  double grounding = 0.0;            // G
  double parent_retention = 0.0;     // R_p
  double actionability = 0.0;        // A_act
  double safety_validity = 0.0;      // V_s
  double non_redundancy = 0.0;       // N
  double mutation_conservatism = 0.0;  // D
  double retention_gate = 1.0;       // M_keep

  bool operator==(const SkillComponents&) const = default;
};

struct SkillScore {
  double raw = 0.0;
  double gated = 0.0;
};

struct ProgressAggregate {
  std::vector<double> scores;
  double mean = 0.0;
  double stddev = 0.0;  // population form
  double lcb = 0.0;
  double agent_progress_q = 0.0;
  double agent_variance_q = 0.0;
};

inline double clip01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

double compute_pass_rate(std::span<const VerifierOutcome> outcomes);
SkillScore compute_skill_q(const SkillComponents& c);
// F_base before the path multiplier.
double compute_progress_base(const ProgressComponents& c);
double compute_progress(const ProgressComponents& c);
// 0.8 * lcb + 0.2 * mean, clipped.
double agent_progress_q(double lcb, double mean);
ProgressAggregate aggregate_progress(std::span<const double> scores, int repeats);
double compute_variance_q(double sigma);

// Everything the trace rubric needs beyond the record itself.
struct EstimationContext {
  int turn_cap = 30;
  std::vector<std::string> target_paths;
  std::vector<std::string> shadow_paths;
};

class ProgressEstimator {
 public:
  virtual ~ProgressEstimator() = default;
  virtual ProgressComponents estimate(const RolloutRecord& rollout, const EstimationContext& ctx) const = 0;
};

// Deterministic trace rubric:
//   V  1 on pass, else 1 - failed/total from the final (or last feedback) tally,
//      else phase/8 when no tally exists
//   X  phase_reached / 4
//   H  0.5 * share of target files written + 0.25 * (first edit follows an
//      inspection) + 0.25 * (every simulation follows a compile after the
//      latest edit)
//   E  share of edits whose next compile succeeded
//   eta 1 - turns_used / turn_cap
//   P_path 1 - share of edits and validations that hit shadow paths
class TraceRubricEstimator final : public ProgressEstimator {
 public:
  ProgressComponents estimate(const RolloutRecord& rollout, const EstimationContext& ctx) const override;
};

ProgressComponents estimate_progress_components(const RolloutRecord& rollout, const EstimationContext& ctx);

// Inputs for scoring a skill document at the point it enters a population.
struct SkillScoringInput {
  std::string_view body;
  std::optional<std::string_view> parent_body;
  const LessonBank* bank = nullptr;
  // KEEP and ADD directives from the oracle summary that produced this child.
  std::vector<std::string> oracle_directives;
  const VisibilityContract* contract = nullptr;
  bool sanitizer_valid = true;
  bool sanitizer_repaired = false;
};

class SkillEstimator {
 public:
  virtual ~SkillEstimator() = default;
  virtual SkillComponents estimate(const SkillScoringInput& input) const = 0;
};

// Text rubric; see the implementation for the per-component definitions.
class TextRubricSkillEstimator final : public SkillEstimator {
 public:
  explicit TextRubricSkillEstimator(const Matcher& matcher = default_matcher()) : matcher_(&matcher) {}
  SkillComponents estimate(const SkillScoringInput& input) const override;

 private:
  const Matcher* matcher_;
};

// Bullet or numbered lines outside headings and fenced code.
std::vector<std::string> directive_lines(std::string_view body);

// Fraction of the bank's critical directives present in the body; 1.0 when
// the bank has none.
double compute_retention_gate(std::string_view body, const LessonBank& bank,
                              const Matcher& matcher = default_matcher());

struct Calibration {
  double point_biserial = 0.0;
  double auc = 0.0;
};

// Rank-based AUC (average ranks for ties) and point-biserial r.
Calibration calibrate(std::span<const double> scores, std::span<const int> labels);
double rank_auc(std::span<const double> scores, std::span<const int> labels);
double point_biserial(std::span<const double> scores, std::span<const int> labels);

}  // namespace skillevo
