#include "skillevo/core.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>

#include "skillevo/text.hpp"

namespace skillevo {
namespace {

template <typename Enum, std::size_t N>
Enum parse_from(const std::array<std::pair<Enum, std::string_view>, N>& table, std::string_view text,
                const char* what) {
  for (const auto& [value, name] : table) {
    if (name == text) return value;
  }
  throw std::invalid_argument(std::string("unknown ") + what + ": " + std::string(text));
}

template <typename Enum, std::size_t N>
std::string_view name_of(const std::array<std::pair<Enum, std::string_view>, N>& table, Enum value) {
  for (const auto& [v, name] : table) {
    if (v == value) return name;
  }
  return "?";
}

constexpr std::array<std::pair<ToolKind, std::string_view>, 7> kToolKinds = {{
    {ToolKind::kInspect, "inspect"},
    {ToolKind::kEdit, "edit"},
    {ToolKind::kCompile, "compile"},
    {ToolKind::kSimulate, "simulate"},
    {ToolKind::kFeedback, "feedback"},
    {ToolKind::kFinalVerify, "final_verify"},
    {ToolKind::kOther, "other"},
}};

constexpr std::array<std::pair<DirectiveTag, std::string_view>, 3> kDirectiveTags = {{
    {DirectiveTag::kKeep, "KEEP"},
    {DirectiveTag::kAdd, "ADD"},
    {DirectiveTag::kRemoveCheck, "REMOVE-violation-check"},
}};

constexpr std::array<std::pair<SkillOrigin, std::string_view>, 4> kOrigins = {{
    {SkillOrigin::kSeed, "seed"},
    {SkillOrigin::kCarriedParent, "carried_parent"},
    {SkillOrigin::kMutatedChild, "mutated_child"},
    {SkillOrigin::kRepairedChild, "repaired_child"},
}};

constexpr std::array<std::pair<LessonTag, std::string_view>, 3> kLessonTags = {{
    {LessonTag::kKeep, "KEEP"},
    {LessonTag::kAdd, "ADD"},
    {LessonTag::kRemove, "REMOVE"},
}};

std::string describe(const std::vector<ConfigViolation>& violations) {
  std::string out = "invalid run config:";
  for (const auto& v : violations) out += " " + v.field + " (" + v.reason + ");";
  return out;
}

}  // namespace

std::string_view phase_label(Phase phase) {
  switch (phase) {
    case Phase::kNone: return "P0-none";
    case Phase::kInspected: return "P1-inspected";
    case Phase::kEdited: return "P2-edited";
    case Phase::kCompiled: return "P3-compiled";
    case Phase::kTested: return "P4-tested";
  }
  return "P0-none";
}

Phase parse_phase(std::string_view text) {
  if (text.size() < 2 || text[0] != 'P' || text[1] < '0' || text[1] > '4') {
    throw std::invalid_argument("unknown phase: " + std::string(text));
  }
  return static_cast<Phase>(text[1] - '0');
}

std::string_view to_string(ToolKind kind) { return name_of(kToolKinds, kind); }
ToolKind parse_tool_kind(std::string_view text) { return parse_from(kToolKinds, text, "tool kind"); }
std::string_view to_string(DirectiveTag tag) { return name_of(kDirectiveTags, tag); }
DirectiveTag parse_directive_tag(std::string_view text) { return parse_from(kDirectiveTags, text, "directive tag"); }
std::string_view to_string(SkillOrigin origin) { return name_of(kOrigins, origin); }
SkillOrigin parse_skill_origin(std::string_view text) { return parse_from(kOrigins, text, "skill origin"); }
std::string_view to_string(LessonTag tag) { return name_of(kLessonTags, tag); }
LessonTag parse_lesson_tag(std::string_view text) { return parse_from(kLessonTags, text, "lesson tag"); }

InvalidConfig::InvalidConfig(std::vector<ConfigViolation> violations)
    : std::invalid_argument(describe(violations)), violations_(std::move(violations)) {}

std::vector<ConfigViolation> check_run_config(const RunConfig& c) {
  std::vector<ConfigViolation> out;
  auto require = [&](bool ok, const char* field, const char* reason) {
    if (!ok) out.push_back({field, reason});
  };
  require(c.population_size >= 1, "K", "population_size must be >= 1");
  require(c.generations >= 1, "G", "generations must be >= 1");
  require(c.repeats >= 1, "R", "repeats must be >= 1");
  require(c.task_count >= 1, "N_task", "task_count must be >= 1");
  require(c.turn_cap >= 1, "turn_cap", "turn_cap must be >= 1");
  require(c.feedback_budget >= 0, "feedback_budget", "feedback_budget must be >= 0");
  require(c.semantic_floor_tau >= 0.0 && c.semantic_floor_tau <= 1.0, "tau", "semantic_floor_tau must lie in [0,1]");
  require(c.rollout_temperature >= 0.0 && c.rollout_temperature <= 2.0, "rollout_temperature", "must lie in [0,2]");
  require(c.oracle_temperature >= 0.0 && c.oracle_temperature <= 2.0, "oracle_temperature", "must lie in [0,2]");
  require(c.mutator_temperature >= 0.0 && c.mutator_temperature <= 2.0, "mutator_temperature", "must lie in [0,2]");
  require(c.parallelism >= 1, "parallelism", "parallelism must be >= 1");
  return out;
}

RunConfig validate_run_config(RunConfig config) {
  auto violations = check_run_config(config);
  if (!violations.empty()) throw InvalidConfig(std::move(violations));
  return config;
}

void validate_task(const Task& task) {
  if (task.task_id.empty()) throw std::invalid_argument("task_id must be non-empty");
  std::set<std::string> seen;
  for (const auto& file : task.workspace) {
    if (file.path.empty() || file.path.front() == '/') {
      throw std::invalid_argument("workspace path must be relative: " + file.path);
    }
    if (!seen.insert(file.path).second) {
      throw std::invalid_argument("duplicate workspace path: " + file.path);
    }
  }
}

void validate_skill(const Skill& skill) {
  if (skill.skill_id.empty()) throw std::invalid_argument("skill_id must be non-empty");
  if (skill.origin == SkillOrigin::kSeed && skill.parent_id) {
    throw std::invalid_argument("seed skill " + skill.skill_id + " must not have a parent");
  }
  if (skill.origin != SkillOrigin::kSeed && !skill.parent_id) {
    throw std::invalid_argument("non-seed skill " + skill.skill_id + " must have a parent");
  }
  if (skill.validity == Validity::kInvalid && skill.invalid_reasons.empty()) {
    throw std::invalid_argument("invalid skill " + skill.skill_id + " must carry a reason");
  }
}

void check_lineage(std::span<const Skill> skills) {
  std::map<std::string, const Skill*> by_id;
  for (const auto& s : skills) {
    auto [it, inserted] = by_id.emplace(s.skill_id, &s);
    if (!inserted && it->second->parent_id != s.parent_id) {
      throw std::invalid_argument("conflicting lineage for " + s.skill_id);
    }
  }
  for (const auto& s : skills) {
    std::set<std::string> visited;
    const Skill* cursor = &s;
    while (true) {
      if (!visited.insert(cursor->skill_id).second) {
        throw std::invalid_argument("lineage cycle through " + cursor->skill_id);
      }
      if (!cursor->parent_id) {
        if (cursor->origin != SkillOrigin::kSeed) {
          throw std::invalid_argument("lineage root " + cursor->skill_id + " is not a seed");
        }
        break;
      }
      auto it = by_id.find(*cursor->parent_id);
      if (it == by_id.end()) {
        throw std::invalid_argument("dangling parent " + *cursor->parent_id + " of " + cursor->skill_id);
      }
      cursor = it->second;
    }
  }
}

std::string seed_skill_id(int slot) { return individual_id(0, slot); }
std::string individual_id(int generation, int slot) {
  return "gen" + std::to_string(generation) + "_ind" + std::to_string(slot);
}
std::string child_id(int generation, int slot) {
  return "child_gen" + std::to_string(generation) + "_" + std::to_string(slot);
}

void validate_outcome(const VerifierOutcome& o) {
  if (o.tests_total && *o.tests_total < 0) throw std::invalid_argument("tests_total must be >= 0");
  if (o.tests_failed && *o.tests_failed < 0) throw std::invalid_argument("tests_failed must be >= 0");
  if (o.tests_total && o.tests_failed && *o.tests_failed > *o.tests_total) {
    throw std::invalid_argument("tests_failed exceeds tests_total");
  }
  if (o.passed && o.tests_failed && *o.tests_failed != 0) {
    throw std::invalid_argument("a passing outcome cannot report failed tests");
  }
}

Phase derive_phase(std::span<const ToolEvent> events) {
  Phase best = Phase::kNone;
  for (const auto& e : events) {
    Phase reached = Phase::kNone;
    switch (e.kind) {
      case ToolKind::kInspect: reached = Phase::kInspected; break;
      case ToolKind::kEdit: reached = Phase::kEdited; break;
      case ToolKind::kCompile: reached = e.succeeded ? Phase::kCompiled : Phase::kNone; break;
      case ToolKind::kSimulate:
      case ToolKind::kFeedback:
      case ToolKind::kFinalVerify: reached = e.succeeded ? Phase::kTested : Phase::kNone; break;
      case ToolKind::kOther: break;
    }
    best = std::max(best, reached);
  }
  return best;
}

std::vector<Lesson> LessonBank::critical_lessons() const {
  std::vector<Lesson> out;
  for (auto i : critical_) out.push_back(entries_[i]);
  return out;
}

std::vector<Lesson> LessonBank::lessons_with(LessonTag tag) const {
  std::vector<Lesson> out;
  std::copy_if(entries_.begin(), entries_.end(), std::back_inserter(out),
               [tag](const Lesson& l) { return l.tag == tag; });
  return out;
}

std::size_t LessonBank::add(Lesson lesson) {
  const std::string key = normalize_text(lesson.text);
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].tag == lesson.tag && normalize_text(entries_[i].text) == key) return i;
  }
  entries_.push_back(std::move(lesson));
  return entries_.size() - 1;
}

void LessonBank::mark_critical(std::size_t index) {
  if (index >= entries_.size()) throw std::out_of_range("lesson index out of range");
  if (entries_[index].tag == LessonTag::kRemove) {
    throw std::invalid_argument("REMOVE lessons cannot be critical");
  }
  if (!is_critical(index)) critical_.push_back(index);
}

bool LessonBank::is_critical(std::size_t index) const {
  return std::find(critical_.begin(), critical_.end(), index) != critical_.end();
}

bool VisibilityContract::tool_allowed(std::string_view tool) const {
  return std::find(allowed_tools.begin(), allowed_tools.end(), tool) != allowed_tools.end();
}

bool VisibilityContract::path_visible(std::string_view path) const {
  return std::find(visible_paths.begin(), visible_paths.end(), path) != visible_paths.end();
}

}  // namespace skillevo
