#include "skillevo/mutator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>

namespace skillevo {
namespace {

constexpr std::array<std::string_view, 4> kTactics = {
    "- Inspect the existing sources and their interfaces before writing any code.",
    "- Compile after every edit and fix all reported errors before simulating.",
    "- Keep port names and widths exactly as the task describes them.",
    "- Summarize the change set with show_changes before finishing.",
};

bool is_directive(const std::string& line) {
  const std::string t = trim(line);
  if (t.empty()) return false;
  if (t.front() == '-' || t.front() == '*') return true;
  const auto dot = t.find('.');
  return dot != std::string::npos && dot > 0 &&
         std::all_of(t.begin(), t.begin() + static_cast<long>(dot), [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

// Tactics go after the last directive outside the lessons section, so that
// they do not count as lessons.
std::string add_tactic(const std::string& body, int generation, int slot, const Matcher& matcher) {
  for (std::size_t i = 0; i < kTactics.size(); ++i) {
    const auto tactic = kTactics[(generation + slot + i) % kTactics.size()];
    const std::string text(tactic.substr(2));
    if (matcher.contains(body, text)) continue;
    auto lines = split_lines(body);
    std::optional<std::size_t> anchor;
    std::optional<std::size_t> lessons_heading;
    bool in_lessons = false;
    for (std::size_t k = 0; k < lines.size(); ++k) {
      const std::string t = trim(lines[k]);
      if (t.starts_with("#")) {
        in_lessons = contains_icase(t, "lesson");
        if (in_lessons && !lessons_heading) lessons_heading = k;
        continue;
      }
      if (!in_lessons && is_directive(lines[k])) anchor = k;
    }
    if (anchor) {
      lines.insert(lines.begin() + static_cast<long>(*anchor) + 1, std::string(tactic));
    } else {
      const std::size_t at = lessons_heading.value_or(lines.size());
      lines.insert(lines.begin() + static_cast<long>(at), {"## Tactics", std::string(tactic), ""});
    }
    return join_lines(lines);
  }
  return body;
}

std::string compact(const std::string& body) {
  const auto lines = split_lines(body);
  const auto directives = std::count_if(lines.begin(), lines.end(), is_directive);
  const long keep = (directives + 1) / 2;
  long seen = 0;
  std::vector<std::string> out;
  bool in_fence = false;
  for (const auto& line : lines) {
    if (trim(line).starts_with("```")) in_fence = !in_fence;
    if (!in_fence && is_directive(line)) {
      if (seen++ >= keep) continue;
    }
    out.push_back(line);
  }
  return join_lines(out);
}

}  // namespace

std::string integrate_lessons(const std::string& body, const MutationHandoff& handoff, const Matcher& matcher) {
  std::vector<std::string> wanted;
  for (const auto* list : {&handoff.critical, &handoff.keep, &handoff.add}) {
    for (const auto& lesson : *list) {
      if (std::find(wanted.begin(), wanted.end(), lesson) == wanted.end()) wanted.push_back(lesson);
    }
  }
  std::vector<std::string> missing;
  for (const auto& lesson : wanted) {
    if (!matcher.contains(body, lesson)) missing.push_back(lesson);
  }
  if (missing.empty()) return body;

  auto lines = split_lines(body);
  auto heading = std::find_if(lines.begin(), lines.end(), [](const std::string& l) {
    const std::string t = trim(l);
    return t.starts_with("#") && contains_icase(t, "lesson");
  });
  std::vector<std::string> bullets;
  for (const auto& m : missing) bullets.push_back("- " + m);
  if (heading == lines.end()) {
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    lines.emplace_back("");
    lines.emplace_back("## Lessons");
    lines.insert(lines.end(), bullets.begin(), bullets.end());
  } else {
    // End of the lessons section: the next heading or the end of the body.
    auto end = std::find_if(heading + 1, lines.end(), [](const std::string& l) { return trim(l).starts_with("#"); });
    while (end != heading + 1 && trim(*(end - 1)).empty()) --end;
    lines.insert(end, bullets.begin(), bullets.end());
  }
  return join_lines(lines);
}

std::string prune_remove_lessons(const std::string& body, const std::vector<std::string>& remove,
                                 const Matcher& matcher) {
  std::vector<std::string> out;
  for (const auto& line : split_lines(body)) {
    const bool repeat = is_directive(line) && std::any_of(remove.begin(), remove.end(), [&](const std::string& r) {
                          return is_negated(line) == is_negated(r) && matcher.line_matches(line, r);
                        });
    if (!repeat) out.push_back(line);
  }
  return join_lines(out);
}

std::string RuleBasedMutator::propose(const MutationRequest& request) {
  if (request.survivor == nullptr) throw MutatorFailure("mutation request without a survivor");
  const MutationHandoff empty;
  const MutationHandoff& handoff = request.handoff ? *request.handoff : empty;
  std::string body = integrate_lessons(request.survivor->body, handoff, *matcher_);
  switch ((request.slot - 1) % 3) {
    case 0:
      break;
    case 1:
      body = prune_remove_lessons(body, handoff.remove, *matcher_);
      body = add_tactic(body, request.generation, request.slot, *matcher_);
      break;
    default:
      body = compact(body);
      break;
  }
  return body;
}

std::string render_mutation_handoff(const MutationHandoff& h) {
  std::string out = fmt::format("# Mutation handoff (generation {})\n\n", h.generation);
  out += fmt::format("survivor: {}\n", h.survivor_id);
  out += fmt::format("{} selection {:+.3f} pass {:+.3f} progress {:+.3f}\n",
                     h.effective() ? "EFFECTIVE" : "NOT EFFECTIVE", h.selection_delta, h.pass_delta,
                     h.progress_delta);
  out += fmt::format("lesson bank: {}\n", h.lesson_bank_ref);
  auto section = [&](const char* title, const std::vector<std::string>& items) {
    out += fmt::format("\n## {}\n", title);
    for (const auto& item : items) out += "- " + item + "\n";
  };
  section("KEEP", h.keep);
  section("ADD", h.add);
  section("REMOVE", h.remove);
  section("CRITICAL", h.critical);
  return out;
}

}  // namespace skillevo
