#pragma once

// Oracle stage: turns one generation's traces into KEEP/ADD/REMOVE lessons.

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillevo/selection.hpp"
#include "skillevo/text.hpp"

namespace skillevo {

class OracleFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CandidateEvidence {
  const Skill* skill = nullptr;
  const CandidateEvaluation* evaluation = nullptr;
  std::span<const RolloutRecord> rollouts;
};

struct OracleInput {
  int generation = 0;
  const Task* task = nullptr;
  std::vector<CandidateEvidence> candidates;
  const Skill* survivor = nullptr;
  const LessonBank* bank = nullptr;
  const VisibilityContract* contract = nullptr;
  double temperature = 0.0;
};

class Oracle {
 public:
  virtual ~Oracle() = default;
  // Throws OracleFailure.
  virtual OracleSummary summarize(const OracleInput& input) = 0;
};

// Selection statistics and the per-task rollup line, shared by every oracle.
void fill_selection_stats(const OracleInput& input, OracleSummary& summary);

// "[cid003] task_x avg=38% (75%, 50%, 25%, 0%) [SOMETIMES SOLVED]"
std::string rollup_line(const std::string& category_id, const std::string& task_id,
                        std::span<const double> pass_rates);

// Notes attached to edits after which the failing-test count dropped, in
// first-seen order. Counts come from local simulation and from hidden-test
// observations (feedback calls and the final verification), each compared
// only with the previous count from the same source.
std::vector<std::string> productive_edit_notes(const RolloutRecord& rollout);

// Deterministic rule-based oracle.
class RuleBasedOracle final : public Oracle {
 public:
  explicit RuleBasedOracle(const Matcher& matcher = default_matcher()) : matcher_(&matcher) {}
  OracleSummary summarize(const OracleInput& input) override;

 private:
  const Matcher* matcher_;
};

// Renders a summary as the oracle_feedback.md document.
std::string render_oracle_feedback(const OracleSummary& summary);

// Parses "KEEP: ...", "ADD: ...", "REMOVE: ...", "CRITICAL: ..." lines from
// free text into the lesson lists of `summary`.
void parse_lesson_lines(std::string_view text, OracleSummary& summary);

}  // namespace skillevo
