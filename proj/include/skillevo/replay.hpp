#pragma once

// Recomputes every dense metric and survivor decision of a run directory from
// the raw rollout diagnostics and skill documents, and diffs the result
// against the stored metric files.

#include <filesystem>
#include <string>
#include <vector>

#include "skillevo/selection.hpp"
#include "skillevo/telemetry.hpp"

namespace skillevo {

struct MetricDiff {
  int generation = 0;
  std::string subject;  // skill id, or "generation"
  std::string field;
  Json stored;
  Json recomputed;
};

struct ReplayedGeneration {
  int generation = 0;
  std::vector<CandidateEvaluation> evaluations;
  std::string stored_survivor;
  std::string replayed_survivor;
};

struct ReplayResult {
  std::vector<ReplayedGeneration> generations;
  std::vector<MetricDiff> diffs;

  bool survivors_match() const;
  bool clean() const { return diffs.empty() && survivors_match(); }
};

// Throws MissingArtifact or SchemaDrift.
ReplayResult replay_metrics(const std::filesystem::path& run_root);

std::string format_diff(const MetricDiff& diff);

}  // namespace skillevo
