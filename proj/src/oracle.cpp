#include "skillevo/oracle.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>

namespace skillevo {
namespace {

struct LessonEvidence {
  bool from_valid = false;
  bool from_invalid = false;
  bool critical = false;
};

void push_unique(std::vector<std::string>& list, const std::string& text) {
  if (std::find(list.begin(), list.end(), text) == list.end()) list.push_back(text);
}

std::optional<int> local_count(const ToolEvent& e) {
  if (e.kind != ToolKind::kSimulate || !e.details.contains("tests_failed")) return std::nullopt;
  return e.details["tests_failed"].get<int>();
}

std::optional<int> hidden_count(const ToolEvent& e) {
  if (e.kind != ToolKind::kFeedback || !e.details.contains("observation")) return std::nullopt;
  const auto& obs = e.details["observation"];
  if (!obs.contains("tests_failed")) return std::nullopt;
  return obs["tests_failed"].get<int>();
}

struct PendingEdit {
  std::string note;
  std::optional<int> local_before;
  std::optional<int> hidden_before;
  bool local_resolved = false;
  bool hidden_resolved = false;
};

std::string solved_label(std::span<const double> rates) {
  const bool none = std::all_of(rates.begin(), rates.end(), [](double r) { return r <= 0.0; });
  const bool all = std::all_of(rates.begin(), rates.end(), [](double r) { return r >= 1.0; });
  if (none) return "NEVER SOLVED";
  if (all) return "ALWAYS SOLVED";
  return "SOMETIMES SOLVED";
}

std::string percent(double x) { return fmt::format("{}%", static_cast<int>(std::lround(100.0 * x))); }

}  // namespace

std::string rollup_line(const std::string& category_id, const std::string& task_id,
                        std::span<const double> pass_rates) {
  double sum = 0.0;
  std::vector<std::string> parts;
  for (double r : pass_rates) {
    sum += r;
    parts.push_back(percent(r));
  }
  const double avg = pass_rates.empty() ? 0.0 : sum / pass_rates.size();
  return fmt::format("[{}] {} avg={} ({}) [{}]", category_id, task_id, percent(avg), fmt::join(parts, ", "),
                     solved_label(pass_rates));
}

void fill_selection_stats(const OracleInput& input, OracleSummary& summary) {
  summary.generation = input.generation;
  std::vector<double> scores;
  std::vector<double> rates;
  for (const auto& c : input.candidates) {
    scores.push_back(c.evaluation->select_q);
    rates.push_back(c.evaluation->pass_rate);
  }
  if (!scores.empty()) {
    summary.best = *std::max_element(scores.begin(), scores.end());
    summary.worst = *std::min_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += s;
    summary.mean = std::clamp(sum / scores.size(), summary.worst, summary.best);
  }
  const std::string cid = input.task ? input.task->category_id : std::string("cid000");
  const std::string tid = input.task ? input.task->task_id : std::string("task");
  summary.rollup = rollup_line(cid, tid, rates);
}

std::vector<std::string> productive_edit_notes(const RolloutRecord& rollout) {
  std::vector<std::string> out;
  std::vector<PendingEdit> pending;
  std::optional<int> last_local;
  std::optional<int> last_hidden;

  auto resolve = [&](int current, bool hidden) {
    for (auto& p : pending) {
      bool& resolved = hidden ? p.hidden_resolved : p.local_resolved;
      const auto& before = hidden ? p.hidden_before : p.local_before;
      if (resolved) continue;
      resolved = true;
      if (before && current < *before) push_unique(out, p.note);
    }
  };

  for (const auto& e : rollout.events) {
    if (e.kind == ToolKind::kEdit && !e.note.empty()) {
      pending.push_back({e.note, last_local, last_hidden});
    }
    if (auto c = local_count(e)) {
      resolve(*c, false);
      last_local = c;
    }
    if (auto c = hidden_count(e)) {
      resolve(*c, true);
      last_hidden = c;
    }
  }
  if (rollout.final_outcome.tests_failed) resolve(*rollout.final_outcome.tests_failed, true);
  return out;
}

OracleSummary RuleBasedOracle::summarize(const OracleInput& input) {
  if (input.survivor == nullptr || input.contract == nullptr) throw OracleFailure("oracle input is incomplete");
  OracleSummary summary;
  fill_selection_stats(input, summary);

  std::vector<std::string> order;
  std::map<std::string, LessonEvidence> evidence;
  auto note_lesson = [&](const std::string& text, bool valid, bool critical) {
    if (!evidence.contains(text)) order.push_back(text);
    auto& ev = evidence[text];
    (valid ? ev.from_valid : ev.from_invalid) = true;
    ev.critical = ev.critical || critical;
  };

  std::vector<std::string> shadow_hits;
  int failed = 0;
  int failed_before_compile = 0;
  int failed_without_feedback = 0;
  for (const auto& c : input.candidates) {
    const bool valid = !c.evaluation->invalid;
    for (const auto& r : c.rollouts) {
      const bool passed = r.final_outcome.passed;
      for (const auto& note : productive_edit_notes(r)) note_lesson(note, valid, passed);
      for (const auto& e : r.events) {
        if (e.kind != ToolKind::kEdit) continue;
        for (const auto& path : e.files_written) {
          const auto& shadows = input.contract->shadow_paths;
          if (std::find(shadows.begin(), shadows.end(), path) != shadows.end()) push_unique(shadow_hits, path);
        }
      }
      if (!passed) {
        ++failed;
        if (r.phase_reached < Phase::kCompiled) ++failed_before_compile;
        if (r.feedback_calls_used == 0) ++failed_without_feedback;
      }
    }
  }

  const std::string target =
      input.contract->target_paths.empty() ? std::string("the target file") : input.contract->target_paths.front();
  if (!shadow_hits.empty()) {
    for (const auto& path : shadow_hits) {
      summary.remove.push_back(fmt::format("Write a same-basename copy of the design at {}", path));
    }
    note_lesson(fmt::format("Edit and validate the exact target file {}; do not write same-basename shadow copies",
                            target),
                true, false);
  }

  if (failed > 0) {
    std::string generic;
    if (2 * failed_before_compile > failed) {
      generic = "Compile the edited target after every change and fix every reported error before simulating.";
    } else if (input.contract->tool_allowed("verify_feedback") && 2 * failed_without_feedback > failed) {
      generic = "Call verify_feedback after a successful compile to learn how many hidden tests still fail.";
    } else {
      generic = "Re-read the task description and check every required behavior in the edited target before "
                "finishing.";
    }
    note_lesson(generic, true, false);
  }

  for (const auto& text : order) {
    const auto& ev = evidence.at(text);
    if (matcher_->contains(input.survivor->body, text)) {
      summary.keep.push_back(text);
    } else {
      summary.add.push_back(text);
    }
    if (ev.critical) summary.critical.push_back(text);
    if (ev.from_invalid && !ev.from_valid) summary.from_invalid.push_back(text);
  }
  return summary;
}

std::string render_oracle_feedback(const OracleSummary& s) {
  std::string out = fmt::format("# Oracle feedback (generation {})\n\n", s.generation);
  out += fmt::format("best={:.3f} mean={:.3f} worst={:.3f}\n", s.best, s.mean, s.worst);
  out += s.rollup + "\n";
  auto section = [&](const char* title, const std::vector<std::string>& items) {
    out += fmt::format("\n## {}\n", title);
    for (const auto& item : items) out += "- " + item + "\n";
  };
  section("KEEP", s.keep);
  section("ADD", s.add);
  section("REMOVE", s.remove);
  section("CRITICAL", s.critical);
  return out;
}

void parse_lesson_lines(std::string_view text, OracleSummary& summary) {
  for (const auto& raw : split_lines(text)) {
    std::string line = trim(raw);
    while (!line.empty() && (line.front() == '-' || line.front() == '*')) line = trim(line.substr(1));
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string tag = trim(line.substr(0, colon));
    const std::string body = trim(line.substr(colon + 1));
    if (body.empty()) continue;
    if (tag == "KEEP") {
      push_unique(summary.keep, body);
    } else if (tag == "ADD") {
      push_unique(summary.add, body);
    } else if (tag == "REMOVE") {
      push_unique(summary.remove, body);
    } else if (tag == "CRITICAL") {
      push_unique(summary.critical, body);
    }
  }
  // A critical lesson must also be a KEEP or ADD lesson.
  for (const auto& c : summary.critical) {
    if (std::find(summary.keep.begin(), summary.keep.end(), c) == summary.keep.end()) push_unique(summary.add, c);
  }
}

}  // namespace skillevo
