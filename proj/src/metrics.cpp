#include "skillevo/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

namespace skillevo {
namespace {

void require_unit(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw MetricError(MetricError::Code::kComponentOutOfRange,
                      std::string("component ") + name + " outside [0,1]: " + std::to_string(value));
  }
}

bool in_list(const std::vector<std::string>& list, std::string_view value) {
  return std::find(list.begin(), list.end(), value) != list.end();
}

std::vector<std::string> event_paths(const ToolEvent& e) {
  std::vector<std::string> out = e.files_written;
  if (e.arguments.is_object()) {
    if (auto it = e.arguments.find("path"); it != e.arguments.end() && it->is_string()) {
      out.push_back(it->get<std::string>());
    }
    if (auto it = e.arguments.find("files"); it != e.arguments.end() && it->is_array()) {
      for (const auto& f : *it) {
        if (f.is_string()) out.push_back(f.get<std::string>());
      }
    }
  }
  return out;
}

bool is_heading(std::string_view line) { return !line.empty() && line.front() == '#'; }

std::string strip_bullet(std::string_view line) {
  std::string t = trim(line);
  if (t.starts_with("- ") || t.starts_with("* ")) return trim(std::string_view(t).substr(2));
  std::size_t i = 0;
  while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i])) != 0) ++i;
  if (i > 0 && i + 1 < t.size() && (t[i] == '.' || t[i] == ')') && t[i + 1] == ' ') {
    return trim(std::string_view(t).substr(i + 2));
  }
  return {};
}

const std::set<std::string>& action_verbs() {
  static const std::set<std::string> kVerbs = {
      "read",    "inspect", "list",   "search", "open",    "edit",  "write",  "compile", "simulate",
      "run",     "call",    "use",    "check",  "verify",  "avoid", "do",     "keep",    "prefer",
      "pass",    "fix",     "add",    "remove", "confirm", "start", "finish", "rerun",   "re-run",
      "compare", "wire",    "connect", "guard", "never",   "always", "make",  "map",     "trace",
      "validate", "coordinate", "declare", "instantiate", "include", "drive", "reset", "record",
      "return", "register", "derive", "advance", "rotate", "hold", "assert", "deassert", "forward",
      "shift", "send", "convert", "reload", "set", "clear", "update", "handle", "ensure", "test",
      "apply", "implement", "review", "re-read", "reread", "annotate", "isolate", "store", "sample",
      "latch", "count", "gate", "match", "preserve", "follow", "treat", "stop", "edit", "place"};
  return kVerbs;
}

}  // namespace

double compute_pass_rate(std::span<const VerifierOutcome> outcomes) {
  if (outcomes.empty()) throw MetricError(MetricError::Code::kEmptyInput, "pass rate over no outcomes");
  int passes = 0;
  for (const auto& o : outcomes) passes += o.passed ? 1 : 0;
  return static_cast<double>(passes) / static_cast<double>(outcomes.size());
}

SkillScore compute_skill_q(const SkillComponents& c) {
  require_unit(c.lesson_coverage, "L");
  require_unit(c.grounding, "G");
  require_unit(c.parent_retention, "R_p");
  require_unit(c.actionability, "A_act");
  require_unit(c.safety_validity, "V_s");
  require_unit(c.non_redundancy, "N");
  require_unit(c.mutation_conservatism, "D");
  require_unit(c.retention_gate, "M_keep");
  const double raw = clip01(0.35 * c.lesson_coverage + 0.30 * c.grounding + 0.10 * c.parent_retention +
                            0.15 * c.actionability + 0.05 * c.safety_validity + 0.03 * c.non_redundancy +
                            0.02 * c.mutation_conservatism);
  const double gated = clip01(raw * (0.55 + 0.45 * c.safety_validity) * c.retention_gate);
  return {raw, gated};
}

double compute_progress_base(const ProgressComponents& c) {
  require_unit(c.verifier_progress, "V");
  require_unit(c.execution_phase, "X");
  require_unit(c.harness_alignment, "H");
  require_unit(c.edit_quality, "E");
  require_unit(c.efficiency, "eta");
  require_unit(c.path_grounding, "P_path");
  return clip01(0.40 * c.verifier_progress + 0.20 * c.execution_phase + 0.15 * c.harness_alignment +
                0.15 * c.edit_quality + 0.10 * c.efficiency);
}

double compute_progress(const ProgressComponents& c) {
  const double base = compute_progress_base(c);
  return clip01(base * (0.55 + 0.45 * c.path_grounding));
}

double agent_progress_q(double lcb, double mean) { return clip01(0.80 * lcb + 0.20 * mean); }

ProgressAggregate aggregate_progress(std::span<const double> scores, int repeats) {
  if (scores.empty()) throw MetricError(MetricError::Code::kEmptyInput, "no progress scores");
  if (repeats < 1 || static_cast<std::size_t>(repeats) != scores.size()) {
    throw MetricError(MetricError::Code::kLengthMismatch,
                      "expected " + std::to_string(repeats) + " scores, got " + std::to_string(scores.size()));
  }
  for (double s : scores) require_unit(s, "F_progress");
  ProgressAggregate agg;
  agg.scores.assign(scores.begin(), scores.end());
  const double n = static_cast<double>(scores.size());
  agg.mean = std::accumulate(scores.begin(), scores.end(), 0.0) / n;
  double ss = 0.0;
  for (double s : scores) ss += (s - agg.mean) * (s - agg.mean);
  agg.stddev = std::sqrt(ss / n);
  agg.lcb = std::max(0.0, agg.mean - 1.96 * agg.stddev / std::sqrt(static_cast<double>(repeats)));
  // A zero-variance sample must give lcb == mean exactly.
  if (agg.stddev == 0.0) agg.lcb = agg.mean;
  agg.agent_progress_q = agent_progress_q(agg.lcb, agg.mean);
  agg.agent_variance_q = compute_variance_q(agg.stddev);
  return agg;
}

double compute_variance_q(double sigma) {
  if (!(sigma >= 0.0)) throw MetricError(MetricError::Code::kNegativeSigma, "sigma must be >= 0");
  return clip01(1.0 - std::min(1.0, sigma / 0.30));
}

ProgressComponents TraceRubricEstimator::estimate(const RolloutRecord& r, const EstimationContext& ctx) const {
  if (r.turns_used < static_cast<int>(r.events.size())) {
    throw MetricError(MetricError::Code::kIncompleteRollout, "rollout records fewer turns than events");
  }
  ProgressComponents c;
  if (r.events.empty()) return c;

  const auto& out = r.final_outcome;
  if (out.passed) {
    c.verifier_progress = 1.0;
  } else if (out.tests_total && out.tests_failed && *out.tests_total > 0) {
    c.verifier_progress = 1.0 - static_cast<double>(*out.tests_failed) / *out.tests_total;
  } else {
    std::optional<double> from_feedback;
    for (const auto& e : r.events) {
      if (e.kind != ToolKind::kFeedback || !e.succeeded) continue;
      const auto& d = e.details;
      if (d.contains("tests_total") && d["tests_total"].is_number_integer() && d["tests_total"].get<int>() > 0 &&
          d.contains("tests_failed") && d["tests_failed"].is_number_integer()) {
        from_feedback = 1.0 - d["tests_failed"].get<double>() / d["tests_total"].get<double>();
      }
    }
    c.verifier_progress = from_feedback.value_or(phase_index(r.phase_reached) / 8.0);
  }
  c.verifier_progress = clip01(c.verifier_progress);
  c.execution_phase = phase_index(r.phase_reached) / 4.0;

  // Harness alignment.
  std::set<std::string> targets_written;
  bool inspected = false;
  std::optional<bool> first_edit_after_inspect;
  bool compiled_since_edit = false;
  int simulations = 0;
  int aligned_simulations = 0;
  for (const auto& e : r.events) {
    switch (e.kind) {
      case ToolKind::kInspect: inspected = true; break;
      case ToolKind::kEdit:
        if (!first_edit_after_inspect) first_edit_after_inspect = inspected;
        compiled_since_edit = false;
        for (const auto& f : e.files_written) {
          if (in_list(ctx.target_paths, f)) targets_written.insert(f);
        }
        break;
      case ToolKind::kCompile:
        if (e.succeeded) compiled_since_edit = true;
        break;
      case ToolKind::kSimulate:
        ++simulations;
        aligned_simulations += compiled_since_edit ? 1 : 0;
        break;
      default: break;
    }
  }
  const double target_share = ctx.target_paths.empty()
                                  ? 1.0
                                  : static_cast<double>(targets_written.size()) / ctx.target_paths.size();
  const double ordering_edit = first_edit_after_inspect.value_or(false) ? 1.0 : 0.0;
  const double ordering_sim =
      simulations > 0 && aligned_simulations == simulations ? 1.0 : 0.0;
  c.harness_alignment = clip01(0.5 * target_share + 0.25 * ordering_edit + 0.25 * ordering_sim);

  // Edit quality: each edit is credited when the next compile succeeds.
  int edits = 0;
  int good_edits = 0;
  for (std::size_t i = 0; i < r.events.size(); ++i) {
    if (r.events[i].kind != ToolKind::kEdit) continue;
    ++edits;
    for (std::size_t j = i + 1; j < r.events.size(); ++j) {
      if (r.events[j].kind == ToolKind::kCompile) {
        good_edits += r.events[j].succeeded ? 1 : 0;
        break;
      }
    }
  }
  c.edit_quality = edits == 0 ? 0.0 : static_cast<double>(good_edits) / edits;

  c.efficiency = clip01(1.0 - static_cast<double>(r.turns_used) / ctx.turn_cap);

  int touched = 0;
  int shadow = 0;
  for (const auto& e : r.events) {
    if (e.kind != ToolKind::kEdit && e.kind != ToolKind::kCompile && e.kind != ToolKind::kSimulate) continue;
    ++touched;
    for (const auto& p : event_paths(e)) {
      if (in_list(ctx.shadow_paths, p)) {
        ++shadow;
        break;
      }
    }
  }
  c.path_grounding = touched == 0 ? 1.0 : clip01(1.0 - static_cast<double>(shadow) / touched);
  return c;
}

ProgressComponents estimate_progress_components(const RolloutRecord& rollout, const EstimationContext& ctx) {
  static const TraceRubricEstimator kEstimator;
  return kEstimator.estimate(rollout, ctx);
}

std::vector<std::string> directive_lines(std::string_view body) {
  std::vector<std::string> out;
  bool in_fence = false;
  for (const auto& line : split_lines(body)) {
    const std::string t = trim(line);
    if (t.starts_with("```")) {
      in_fence = !in_fence;
      continue;
    }
    if (in_fence || is_heading(t)) continue;
    std::string d = strip_bullet(t);
    if (!d.empty()) out.push_back(std::move(d));
  }
  return out;
}

double compute_retention_gate(std::string_view body, const LessonBank& bank, const Matcher& matcher) {
  const auto critical = bank.critical_lessons();
  if (critical.empty()) return 1.0;
  int kept = 0;
  for (const auto& lesson : critical) kept += matcher.contains(body, lesson.text) ? 1 : 0;
  return static_cast<double>(kept) / critical.size();
}

// L   share of the producing oracle's KEEP/ADD directives present (1 if none)
// G   half lesson grounding (lines under a "lessons" heading traceable to a bank
//     entry), half mention grounding (lines naming paths/tools that are all
//     visible/allowed)
// R_p share of parent directive lines retained (1 without a parent)
// A_act share of directive lines with an action verb among their first six words
//     or naming an allowed tool
// V_s 1 clean, 0.75 repaired, 0 invalid
// N   unique directive lines / directive lines
// D   token Jaccard similarity to the parent (1 without a parent)
SkillComponents TextRubricSkillEstimator::estimate(const SkillScoringInput& in) const {
  SkillComponents c;
  const auto lines = directive_lines(in.body);

  if (in.oracle_directives.empty()) {
    c.lesson_coverage = 1.0;
  } else {
    int hit = 0;
    for (const auto& d : in.oracle_directives) hit += matcher_->contains(in.body, d) ? 1 : 0;
    c.lesson_coverage = static_cast<double>(hit) / in.oracle_directives.size();
  }

  // Lesson grounding.
  int lesson_lines = 0;
  int grounded_lessons = 0;
  {
    bool in_lessons = false;
    bool in_fence = false;
    for (const auto& raw : split_lines(in.body)) {
      const std::string t = trim(raw);
      if (t.starts_with("```")) {
        in_fence = !in_fence;
        continue;
      }
      if (in_fence) continue;
      if (is_heading(t)) {
        in_lessons = contains_icase(t, "lesson");
        continue;
      }
      if (!in_lessons) continue;
      const std::string d = strip_bullet(t);
      if (d.empty()) continue;
      ++lesson_lines;
      if (in.bank == nullptr) continue;
      for (const auto& entry : in.bank->entries()) {
        if (entry.tag != LessonTag::kRemove && matcher_->line_matches(d, entry.text)) {
          ++grounded_lessons;
          break;
        }
      }
    }
  }
  const double lesson_grounding =
      lesson_lines == 0 ? 1.0 : (in.bank == nullptr ? 0.0 : static_cast<double>(grounded_lessons) / lesson_lines);

  int mention_lines = 0;
  int grounded_mentions = 0;
  if (in.contract != nullptr) {
    for (const auto& line : lines) {
      const auto paths = path_tokens(line);
      std::vector<std::string> tools;
      const auto tokens = token_set(line);
      for (const auto& tool : in.contract->known_tools) {
        if (tokens.contains(normalize_text(tool))) tools.push_back(tool);
      }
      if (paths.empty() && tools.empty()) continue;
      if (is_negated(line)) continue;
      ++mention_lines;
      bool ok = std::all_of(paths.begin(), paths.end(),
                            [&](const std::string& p) { return in.contract->path_visible(p); }) &&
                std::all_of(tools.begin(), tools.end(),
                            [&](const std::string& t) { return in.contract->tool_allowed(t); });
      grounded_mentions += ok ? 1 : 0;
    }
  }
  const double mention_grounding =
      mention_lines == 0 ? 1.0 : static_cast<double>(grounded_mentions) / mention_lines;
  c.grounding = clip01(0.5 * lesson_grounding + 0.5 * mention_grounding);

  if (!in.parent_body) {
    c.parent_retention = 1.0;
  } else {
    const auto parent_lines = directive_lines(*in.parent_body);
    if (parent_lines.empty()) {
      c.parent_retention = 1.0;
    } else {
      int kept = 0;
      for (const auto& pl : parent_lines) kept += matcher_->contains(in.body, pl) ? 1 : 0;
      c.parent_retention = static_cast<double>(kept) / parent_lines.size();
    }
  }

  if (lines.empty()) {
    c.actionability = 0.0;
    c.non_redundancy = 1.0;
  } else {
    int actionable = 0;
    std::set<std::string> unique;
    for (const auto& line : lines) {
      const auto words = word_tokens(line);
      const auto head = std::min<std::size_t>(words.size(), 6);
      bool act = std::any_of(words.begin(), words.begin() + static_cast<long>(head),
                             [](const std::string& w) { return action_verbs().contains(w); });
      if (!act && in.contract != nullptr) {
        const auto tokens = token_set(line);
        for (const auto& tool : in.contract->allowed_tools) act = act || tokens.contains(normalize_text(tool));
      }
      actionable += act ? 1 : 0;
      unique.insert(normalize_text(line));
    }
    c.actionability = static_cast<double>(actionable) / lines.size();
    c.non_redundancy = static_cast<double>(unique.size()) / lines.size();
  }

  c.safety_validity = !in.sanitizer_valid ? 0.0 : (in.sanitizer_repaired ? 0.75 : 1.0);
  c.mutation_conservatism = in.parent_body ? jaccard_similarity(in.body, *in.parent_body) : 1.0;
  c.retention_gate = in.bank == nullptr ? 1.0 : compute_retention_gate(in.body, *in.bank, *matcher_);
  return c;
}

double rank_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw MetricError(MetricError::Code::kLengthMismatch, "scores/labels length");
  if (scores.size() < 2) throw MetricError(MetricError::Code::kDegenerateInput, "need at least two points");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Doubled average ranks stay integral.
  std::vector<long long> rank2(scores.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const long long doubled = static_cast<long long>(i + 1) + static_cast<long long>(j);
    for (std::size_t k = i; k < j; ++k) rank2[order[k]] = doubled;
    i = j;
  }
  long long n_pos = 0;
  long long rank_sum2 = 0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] != 0 && labels[k] != 1) throw MetricError(MetricError::Code::kDegenerateInput, "labels must be 0/1");
    if (labels[k] == 1) {
      ++n_pos;
      rank_sum2 += rank2[k];
    }
  }
  const long long n_neg = static_cast<long long>(labels.size()) - n_pos;
  if (n_pos == 0 || n_neg == 0) throw MetricError(MetricError::Code::kDegenerateInput, "AUC needs both classes");
  // 2U = rank_sum2 - n_pos (n_pos + 1)
  const long long u2 = rank_sum2 - n_pos * (n_pos + 1);
  return static_cast<double>(u2) / (2.0 * static_cast<double>(n_pos * n_neg));
}

double point_biserial(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw MetricError(MetricError::Code::kLengthMismatch, "scores/labels length");
  if (scores.size() < 2) throw MetricError(MetricError::Code::kDegenerateInput, "need at least two points");
  const double n = static_cast<double>(scores.size());
  double sum1 = 0.0, sum0 = 0.0;
  double n1 = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    if (labels[k] == 1) {
      sum1 += scores[k];
      n1 += 1.0;
    } else {
      sum0 += scores[k];
    }
  }
  const double n0 = n - n1;
  if (n1 == 0.0 || n0 == 0.0) throw MetricError(MetricError::Code::kDegenerateInput, "single class");
  const double mean = (sum1 + sum0) / n;
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / n);
  if (sd == 0.0) throw MetricError(MetricError::Code::kDegenerateInput, "zero score variance");
  const double m1 = sum1 / n1;
  const double m0 = sum0 / n0;
  return (m1 - m0) / sd * std::sqrt((n1 / n) * (n0 / n));
}

Calibration calibrate(std::span<const double> scores, std::span<const int> labels) {
  return {point_biserial(scores, labels), rank_auc(scores, labels)};
}

}  // namespace skillevo
