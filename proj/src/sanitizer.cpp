#include "skillevo/sanitizer.hpp"

#include <algorithm>
#include <array>

#include "skillevo/metrics.hpp"

namespace skillevo {
namespace {

constexpr std::array<std::string_view, 8> kHiddenMarkers = {
    "reference solution", "reference patch", "docker-compose", "dockerfile",
    "hidden harness",     "harness source",  "cocotb source",  "golden model"};

constexpr std::array<std::string_view, 14> kExecutionWords = {
    "run", "execute", "invoke", "launch", "call", "use", "pytest", "make", "read", "cat", "open", "inspect",
    "check", "source"};

struct Line {
  std::string text;
  bool heading = false;
  bool fence_marker = false;
  bool in_fence = false;
};

std::vector<Line> classify(const std::vector<std::string>& raw) {
  std::vector<Line> out;
  bool in_fence = false;
  for (const auto& text : raw) {
    Line line{text};
    const std::string t = trim(text);
    if (t.starts_with("```")) {
      line.fence_marker = true;
      in_fence = !in_fence;
    } else {
      line.in_fence = in_fence;
      line.heading = !in_fence && t.starts_with("#");
    }
    out.push_back(std::move(line));
  }
  return out;
}

std::vector<std::string> texts(const std::vector<Line>& lines) {
  std::vector<std::string> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(l.text);
  return out;
}

class ReportBuilder {
 public:
  void repair(std::string_view tag) {
    if (std::find(report_.repairs.begin(), report_.repairs.end(), tag) == report_.repairs.end()) {
      report_.repairs.emplace_back(tag);
    }
  }
  void invalid(std::string_view reason) {
    if (std::find(report_.invalid_reasons.begin(), report_.invalid_reasons.end(), reason) ==
        report_.invalid_reasons.end()) {
      report_.invalid_reasons.emplace_back(reason);
    }
  }
  void removed(std::string_view reason, std::string_view excerpt) {
    report_.removed_spans.push_back({std::string(reason), sha256_hex(excerpt).substr(0, 16)});
  }
  SanitizerReport take() {
    std::sort(report_.invalid_reasons.begin(), report_.invalid_reasons.end());
    return std::move(report_);
  }

 private:
  SanitizerReport report_;
};

bool mentions_hidden(std::string_view line, const VisibilityContract& contract) {
  for (const auto& id : contract.hidden_identifiers) {
    if (contains_icase(line, id)) return true;
  }
  for (auto marker : kHiddenMarkers) {
    if (contains_icase(line, marker)) return true;
  }
  return false;
}

bool is_execution_advice(std::string_view line) {
  const auto tokens = token_set(line);
  return std::any_of(kExecutionWords.begin(), kExecutionWords.end(),
                     [&](std::string_view w) { return tokens.contains(std::string(w)); });
}

std::string visible_metadata_advice(const VisibilityContract& contract) {
  std::string advice = "- Validate with visible task metadata and local compile and simulate results";
  if (contract.tool_allowed("verify_feedback")) advice += ", plus verify_feedback observations,";
  advice += " instead of hidden verifier internals.";
  return advice;
}

std::vector<std::string> unavailable_tools(const VisibilityContract& contract) {
  std::vector<std::string> out;
  for (const auto& tool : contract.known_tools) {
    if (!contract.tool_allowed(tool)) out.push_back(tool);
  }
  return out;
}

bool advises_unavailable_tool(std::string_view line, const std::vector<std::string>& unavailable) {
  if (unavailable.empty() || is_negated(line)) return false;
  const auto tokens = token_set(line);
  return std::any_of(unavailable.begin(), unavailable.end(),
                     [&](const std::string& t) { return tokens.contains(normalize_text(t)); });
}

std::string basename_of(std::string_view path) {
  const auto pos = path.find_last_of('/');
  return std::string(pos == std::string_view::npos ? path : path.substr(pos + 1));
}

bool path_confirmed(const std::string& token, const VisibilityContract& contract) {
  if (token.front() == '/') return false;
  if (contract.path_visible(token)) return true;
  if (token.find('/') == std::string::npos) {
    return std::any_of(contract.visible_paths.begin(), contract.visible_paths.end(),
                       [&](const std::string& p) { return basename_of(p) == token; });
  }
  return false;
}

std::string confirmed_replacement(const std::string& token, const VisibilityContract& contract) {
  const std::string base = basename_of(token);
  std::vector<std::string> matches;
  for (const auto& t : contract.target_paths) {
    if (basename_of(t) == base) matches.push_back(t);
  }
  if (matches.size() == 1) return matches.front();
  return "the confirmed target file";
}

struct LessonSets {
  std::vector<std::string> keep;
  std::vector<std::string> remove;
};

LessonSets lesson_sets(const LessonBank& bank) {
  LessonSets sets;
  for (std::size_t i = 0; i < bank.entries().size(); ++i) {
    const auto& e = bank.entries()[i];
    if (e.tag == LessonTag::kRemove) {
      sets.remove.push_back(e.text);
    } else if (e.tag == LessonTag::kKeep || bank.is_critical(i)) {
      sets.keep.push_back(e.text);
    }
  }
  return sets;
}

bool contradicts(std::string_view line, const std::vector<std::string>& keep, const Matcher& m) {
  return std::any_of(keep.begin(), keep.end(), [&](const std::string& k) {
    return is_negated(line) != is_negated(k) && m.line_matches(line, k);
  });
}

bool repeats_remove(std::string_view line, const std::vector<std::string>& remove, const Matcher& m) {
  return std::any_of(remove.begin(), remove.end(), [&](const std::string& r) {
    return is_negated(line) == is_negated(r) && m.line_matches(line, r);
  });
}

bool has_content(const std::vector<Line>& lines) {
  return std::any_of(lines.begin(), lines.end(), [](const Line& l) {
    return !l.heading && !l.fence_marker && !trim(l.text).empty();
  });
}

}  // namespace

SanitizeResult sanitize(const Skill& proposal, const VisibilityContract& contract, const LessonBank& bank,
                        const Matcher& matcher) {
  ReportBuilder report;
  auto lines = classify(split_lines(proposal.body));

  // 1. Hidden-artifact leakage.
  {
    const std::string advice = visible_metadata_advice(contract);
    bool advice_present = std::any_of(lines.begin(), lines.end(), [&](const Line& l) { return l.text == advice; });
    std::vector<std::string> next;
    for (const auto& line : lines) {
      if (!mentions_hidden(line.text, contract)) {
        next.push_back(line.text);
        continue;
      }
      report.removed("hidden_reference", line.text);
      if (!line.in_fence && !line.heading && !line.fence_marker && is_execution_advice(line.text)) {
        report.repair(repair_tag::kHarnessRewrite);
        if (!advice_present) {
          next.push_back(advice);
          advice_present = true;
        }
      } else {
        report.repair(repair_tag::kHiddenRemoved);
      }
    }
    lines = classify(next);
  }

  // 2. Unavailable tools.
  {
    const auto unavailable = unavailable_tools(contract);
    std::vector<std::string> next;
    for (const auto& line : lines) {
      if (!line.fence_marker && advises_unavailable_tool(line.text, unavailable)) {
        if (line.heading || line.in_fence) {
          report.invalid(invalid_reason::kUnavailableTool);
        } else {
          report.repair(repair_tag::kToolRemoved);
          report.removed("unavailable_tool", line.text);
          continue;
        }
      }
      next.push_back(line.text);
    }
    lines = classify(next);
  }

  // 3. Unconfirmed path guidance.
  for (auto& line : lines) {
    if (line.heading || line.fence_marker) continue;
    for (const auto& token : path_tokens(line.text)) {
      if (path_confirmed(token, contract)) continue;
      const std::string replacement = confirmed_replacement(token, contract);
      std::string::size_type pos = 0;
      while ((pos = line.text.find(token, pos)) != std::string::npos) {
        line.text.replace(pos, token.size(), replacement);
        pos += replacement.size();
      }
      report.repair(repair_tag::kPathRewrite);
    }
  }

  // 4. Contradictions and REMOVE repeats.
  {
    const auto sets = lesson_sets(bank);
    std::vector<std::string> next;
    for (const auto& line : lines) {
      if (line.fence_marker || trim(line.text).empty()) {
        next.push_back(line.text);
        continue;
      }
      const bool contra = contradicts(line.text, sets.keep, matcher);
      const bool repeat = repeats_remove(line.text, sets.remove, matcher);
      if (!contra && !repeat) {
        next.push_back(line.text);
        continue;
      }
      if (line.heading) {
        if (contra) report.invalid(invalid_reason::kContradiction);
        if (repeat) report.invalid(invalid_reason::kRemoveViolation);
        next.push_back(line.text);
        continue;
      }
      if (contra) report.repair(repair_tag::kContradictionRemoved);
      if (repeat) report.repair(repair_tag::kRemoveRepeatRemoved);
      report.removed(contra ? "contradiction" : "remove_repeat", line.text);
    }
    lines = classify(next);
  }

  if (!has_content(lines)) report.invalid(invalid_reason::kEmpty);

  SanitizeResult result;
  result.skill = proposal;
  std::string body = join_lines(texts(lines));
  // Redaction is already line-level; this only guards against identifiers
  // assembled across rewrites.
  std::vector<std::string> hidden(contract.hidden_identifiers.begin(), contract.hidden_identifiers.end());
  result.skill.body = scrub(std::move(body), hidden);
  result.report = report.take();
  if (result.report.repaired() && result.skill.origin == SkillOrigin::kMutatedChild) {
    result.skill.origin = SkillOrigin::kRepairedChild;
  }
  result.skill.invalid_reasons = result.report.invalid_reasons;
  result.skill.validity = result.report.valid() ? Validity::kValid : Validity::kInvalid;
  return result;
}

double compute_retention_gate(const Skill& child, const LessonBank& bank, const Matcher& matcher) {
  return compute_retention_gate(child.body, bank, matcher);
}

ViolationCounts count_violations(std::string_view body, const LessonBank& bank, const Matcher& matcher) {
  ViolationCounts counts;
  for (const auto& lesson : bank.critical_lessons()) {
    counts.missing_critical += matcher.contains(body, lesson.text) ? 0 : 1;
  }
  const auto sets = lesson_sets(bank);
  for (const auto& line : classify(split_lines(body))) {
    if (line.fence_marker || trim(line.text).empty()) continue;
    counts.contradiction += contradicts(line.text, sets.keep, matcher) ? 1 : 0;
    counts.remove_violation += repeats_remove(line.text, sets.remove, matcher) ? 1 : 0;
  }
  return counts;
}

MutationHealth compute_mutation_health(const Skill& child, const Skill& parent, const LessonBank& bank,
                                       std::span<const std::string> oracle_directives, const SanitizerReport& report,
                                       const Matcher& matcher) {
  MutationHealth h;
  h.child_slot = child.slot;
  h.parent_id = parent.skill_id;
  h.has_oracle_feedback = !oracle_directives.empty();
  h.similarity = jaccard_similarity(child.body, parent.body);
  if (oracle_directives.empty()) {
    h.coverage = 1.0;
    h.parent_coverage = 1.0;
  } else {
    int child_hits = 0;
    int parent_hits = 0;
    for (const auto& d : oracle_directives) {
      child_hits += matcher.contains(child.body, d) ? 1 : 0;
      parent_hits += matcher.contains(parent.body, d) ? 1 : 0;
    }
    h.coverage = static_cast<double>(child_hits) / oracle_directives.size();
    h.parent_coverage = static_cast<double>(parent_hits) / oracle_directives.size();
    h.parent_missing = static_cast<int>(oracle_directives.size()) - parent_hits;
  }
  const auto counts = count_violations(child.body, bank, matcher);
  h.missing_critical = counts.missing_critical;
  h.remove_violation = counts.remove_violation;
  h.contradiction = counts.contradiction;
  h.repair_attempted = report.repaired();
  h.ok = h.missing_critical == 0 && h.remove_violation == 0 && h.contradiction == 0;
  return h;
}

}  // namespace skillevo
