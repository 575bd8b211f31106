#pragma once

// Deterministic repair of mutated skill proposals and the mutation-health gate.
//
// Repair passes run in a fixed order:
//   1. hidden-artifact leakage (contract hidden identifiers and built-in markers
//      such as reference solutions or container files): execution advice is
//      rewritten to visible-metadata advice, any other line is dropped
//   2. advice to use a known tool outside the allowed list is dropped
//   3. paths that are not in the visible workspace are rewritten
//   4. lines contradicting a KEEP lesson or repeating a REMOVE lesson are dropped
// Headings are never rewritten; a violation of pass 2 or 4 left in a heading
// (or a pass 2 violation inside fenced code) marks the skill invalid.

#include <span>
#include <string>
#include <vector>

#include "skillevo/core.hpp"
#include "skillevo/text.hpp"

namespace skillevo {

namespace repair_tag {
inline constexpr std::string_view kHarnessRewrite = "rewrote_harness_execution_to_visible_metadata";
inline constexpr std::string_view kHiddenRemoved = "removed_hidden_reference";
inline constexpr std::string_view kToolRemoved = "removed_unavailable_tool_advice";
inline constexpr std::string_view kPathRewrite = "rewrote_unconfirmed_path_guidance";
inline constexpr std::string_view kContradictionRemoved = "removed_keep_contradiction";
inline constexpr std::string_view kRemoveRepeatRemoved = "removed_remove_lesson_repeat";
}  // namespace repair_tag

namespace invalid_reason {
inline constexpr std::string_view kUnavailableTool = "unavailable_tool";
inline constexpr std::string_view kContradiction = "contradiction";
inline constexpr std::string_view kRemoveViolation = "remove_violation";
inline constexpr std::string_view kEmpty = "empty_after_repair";
}  // namespace invalid_reason

struct RemovedSpan {
  std::string reason;
  std::string excerpt_hash;

  bool operator==(const RemovedSpan&) const = default;
};

struct SanitizerReport {
  std::vector<std::string> repairs;  // unique tags, first-seen order
  std::vector<std::string> invalid_reasons;
  std::vector<RemovedSpan> removed_spans;

  bool valid() const { return invalid_reasons.empty(); }
  bool repaired() const { return !repairs.empty(); }
  bool operator==(const SanitizerReport&) const = default;
};

struct SanitizeResult {
  Skill skill;
  SanitizerReport report;
};

SanitizeResult sanitize(const Skill& proposal, const VisibilityContract& contract, const LessonBank& bank,
                        const Matcher& matcher = default_matcher());

double compute_retention_gate(const Skill& child, const LessonBank& bank, const Matcher& matcher = default_matcher());

struct ViolationCounts {
  int missing_critical = 0;
  int remove_violation = 0;
  int contradiction = 0;
};

ViolationCounts count_violations(std::string_view body, const LessonBank& bank,
                                 const Matcher& matcher = default_matcher());

struct MutationHealth {
  int child_slot = 0;
  std::string parent_id;
  bool ok = false;
  bool has_oracle_feedback = false;
  double similarity = 0.0;
  double coverage = 0.0;
  double parent_coverage = 0.0;
  int missing_critical = 0;
  int parent_missing = 0;
  int remove_violation = 0;
  int contradiction = 0;
  bool repair_attempted = false;

  bool operator==(const MutationHealth&) const = default;
};

// `oracle_directives` are the KEEP/ADD lessons of the current generation.
MutationHealth compute_mutation_health(const Skill& child, const Skill& parent, const LessonBank& bank,
                                       std::span<const std::string> oracle_directives, const SanitizerReport& report,
                                       const Matcher& matcher = default_matcher());

}  // namespace skillevo
