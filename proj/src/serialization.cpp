#include "skillevo/serialization.hpp"

namespace skillevo {
namespace {

template <typename T>
void put_optional(Json& j, const char* key, const std::optional<T>& value) {
  j[key] = value ? Json(*value) : Json(nullptr);
}

template <typename T>
std::optional<T> get_optional(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

void to_json(Json& j, const RunConfig& c) {
  j = {{"population_size", c.population_size},
       {"generations", c.generations},
       {"repeats", c.repeats},
       {"task_count", c.task_count},
       {"turn_cap", c.turn_cap},
       {"feedback_budget", c.feedback_budget},
       {"semantic_floor_tau", c.semantic_floor_tau},
       {"dense_feedback_enabled", c.dense_feedback_enabled},
       {"ea_enabled", c.ea_enabled},
       {"rollout_temperature", c.rollout_temperature},
       {"oracle_temperature", c.oracle_temperature},
       {"mutator_temperature", c.mutator_temperature},
       {"seed", c.seed},
       {"parallelism", c.parallelism}};
}

void from_json(const Json& j, RunConfig& c) {
  c.population_size = j.at("population_size");
  c.generations = j.at("generations");
  c.repeats = j.at("repeats");
  c.task_count = j.at("task_count");
  c.turn_cap = j.at("turn_cap");
  c.feedback_budget = j.at("feedback_budget");
  c.semantic_floor_tau = j.at("semantic_floor_tau");
  c.dense_feedback_enabled = j.at("dense_feedback_enabled");
  c.ea_enabled = j.at("ea_enabled");
  c.rollout_temperature = j.at("rollout_temperature");
  c.oracle_temperature = j.at("oracle_temperature");
  c.mutator_temperature = j.at("mutator_temperature");
  c.seed = j.at("seed");
  c.parallelism = j.at("parallelism");
}

void to_json(Json& j, const Directive& d) { j = {{"tag", to_string(d.tag)}, {"text", d.text}}; }

void from_json(const Json& j, Directive& d) {
  d.tag = parse_directive_tag(j.at("tag").get<std::string>());
  d.text = j.at("text");
}

void to_json(Json& j, const Skill& s) {
  j = {{"skill_id", s.skill_id},
       {"generation", s.generation},
       {"slot", s.slot},
       {"body", s.body},
       {"directives", s.directives},
       {"origin", to_string(s.origin)},
       {"validity", s.valid() ? "valid" : "invalid"},
       {"invalid_reasons", s.invalid_reasons}};
  put_optional(j, "parent_id", s.parent_id);
}

void from_json(const Json& j, Skill& s) {
  s.skill_id = j.at("skill_id");
  s.generation = j.at("generation");
  s.slot = j.at("slot");
  s.parent_id = get_optional<std::string>(j, "parent_id");
  s.body = j.at("body");
  s.directives = j.at("directives").get<std::vector<Directive>>();
  s.origin = parse_skill_origin(j.at("origin").get<std::string>());
  const auto validity = j.at("validity").get<std::string>();
  if (validity != "valid" && validity != "invalid") throw std::invalid_argument("unknown validity: " + validity);
  s.validity = validity == "valid" ? Validity::kValid : Validity::kInvalid;
  s.invalid_reasons = j.at("invalid_reasons").get<std::vector<std::string>>();
}

void to_json(Json& j, const ToolEvent& e) {
  j = {{"turn", e.turn},
       {"tool_name", e.tool_name},
       {"arguments", e.arguments},
       {"result_summary", e.result_summary},
       {"files_written", e.files_written},
       {"kind", to_string(e.kind)},
       {"succeeded", e.succeeded},
       {"note", e.note},
       {"details", e.details}};
}

void from_json(const Json& j, ToolEvent& e) {
  e.turn = j.at("turn");
  e.tool_name = j.at("tool_name");
  e.arguments = j.at("arguments");
  e.result_summary = j.at("result_summary");
  e.files_written = j.at("files_written").get<std::vector<std::string>>();
  e.kind = parse_tool_kind(j.at("kind").get<std::string>());
  e.succeeded = j.at("succeeded");
  e.note = j.at("note");
  e.details = j.at("details");
}

void to_json(Json& j, const VerifierOutcome& o) {
  j = {{"passed", o.passed ? 1 : 0},
       {"phase", phase_label(o.phase)},
       {"exit_code", o.exit_code},
       {"sanitized_tail", o.sanitized_tail},
       {"infra_failure", o.infra_failure}};
  put_optional(j, "tests_total", o.tests_total);
  put_optional(j, "tests_failed", o.tests_failed);
}

void from_json(const Json& j, VerifierOutcome& o) {
  o.passed = j.at("passed").get<int>() == 1;
  o.tests_total = get_optional<int>(j, "tests_total");
  o.tests_failed = get_optional<int>(j, "tests_failed");
  o.phase = parse_phase(j.at("phase").get<std::string>());
  o.exit_code = j.at("exit_code");
  o.sanitized_tail = j.at("sanitized_tail");
  o.infra_failure = j.at("infra_failure");
}

void to_json(Json& j, const ProgressComponents& p) {
  j = {{"V", p.verifier_progress}, {"X", p.execution_phase}, {"H", p.harness_alignment},
       {"E", p.edit_quality},      {"eta", p.efficiency},     {"P_path", p.path_grounding}};
}

void from_json(const Json& j, ProgressComponents& p) {
  p.verifier_progress = j.at("V");
  p.execution_phase = j.at("X");
  p.harness_alignment = j.at("H");
  p.edit_quality = j.at("E");
  p.efficiency = j.at("eta");
  p.path_grounding = j.at("P_path");
}

void to_json(Json& j, const RolloutRecord& r) {
  j = {{"task_id", r.task_id},
       {"skill_id", r.skill_id},
       {"repeat_index", r.repeat_index},
       {"turns_used", r.turns_used},
       {"events", r.events},
       {"feedback_calls_used", r.feedback_calls_used},
       {"final_outcome", r.final_outcome},
       {"phase_reached", phase_label(r.phase_reached)},
       {"progress", r.progress},
       {"infra_failure", r.infra_failure}};
}

void from_json(const Json& j, RolloutRecord& r) {
  r.task_id = j.at("task_id");
  r.skill_id = j.at("skill_id");
  r.repeat_index = j.at("repeat_index");
  r.turns_used = j.at("turns_used");
  r.events = j.at("events").get<std::vector<ToolEvent>>();
  r.feedback_calls_used = j.at("feedback_calls_used");
  r.final_outcome = j.at("final_outcome").get<VerifierOutcome>();
  r.phase_reached = parse_phase(j.at("phase_reached").get<std::string>());
  r.progress = j.at("progress").get<ProgressComponents>();
  r.infra_failure = j.at("infra_failure");
}

void to_json(Json& j, const Lesson& l) {
  j = {{"tag", to_string(l.tag)},
       {"text", l.text},
       {"source_generation", l.source_generation},
       {"from_invalid_candidate", l.from_invalid_candidate}};
}

void from_json(const Json& j, Lesson& l) {
  l.tag = parse_lesson_tag(j.at("tag").get<std::string>());
  l.text = j.at("text");
  l.source_generation = j.at("source_generation");
  l.from_invalid_candidate = j.at("from_invalid_candidate");
}

void to_json(Json& j, const LessonBank& b) {
  j = {{"entries", b.entries()}, {"critical", b.critical_indices()}};
}

void from_json(const Json& j, LessonBank& b) {
  b = LessonBank{};
  for (const auto& e : j.at("entries")) {
    const auto before = b.entries().size();
    if (b.add(e.get<Lesson>()) != before) throw std::invalid_argument("duplicate lesson in bank document");
  }
  for (const auto& index : j.at("critical")) b.mark_critical(index.get<std::size_t>());
}

void to_json(Json& j, const OracleSummary& o) {
  j = {{"generation", o.generation}, {"best", o.best},     {"mean", o.mean},
       {"worst", o.worst},           {"rollup", o.rollup}, {"keep", o.keep},
       {"add", o.add},               {"remove", o.remove}, {"critical", o.critical},
       {"from_invalid", o.from_invalid}};
}

void from_json(const Json& j, OracleSummary& o) {
  o.generation = j.at("generation");
  o.best = j.at("best");
  o.mean = j.at("mean");
  o.worst = j.at("worst");
  o.rollup = j.at("rollup");
  o.keep = j.at("keep").get<std::vector<std::string>>();
  o.add = j.at("add").get<std::vector<std::string>>();
  o.remove = j.at("remove").get<std::vector<std::string>>();
  o.critical = j.at("critical").get<std::vector<std::string>>();
  o.from_invalid = j.at("from_invalid").get<std::vector<std::string>>();
}

void to_json(Json& j, const MutationHandoff& h) {
  j = {{"generation", h.generation},
       {"survivor_id", h.survivor_id},
       {"selection_delta", h.selection_delta},
       {"pass_delta", h.pass_delta},
       {"progress_delta", h.progress_delta},
       {"lesson_bank_ref", h.lesson_bank_ref},
       {"keep", h.keep},
       {"add", h.add},
       {"remove", h.remove},
       {"critical", h.critical}};
}

void from_json(const Json& j, MutationHandoff& h) {
  h.generation = j.at("generation");
  h.survivor_id = j.at("survivor_id");
  h.selection_delta = j.at("selection_delta");
  h.pass_delta = j.at("pass_delta");
  h.progress_delta = j.at("progress_delta");
  h.lesson_bank_ref = j.at("lesson_bank_ref");
  h.keep = j.at("keep").get<std::vector<std::string>>();
  h.add = j.at("add").get<std::vector<std::string>>();
  h.remove = j.at("remove").get<std::vector<std::string>>();
  h.critical = j.at("critical").get<std::vector<std::string>>();
}

void to_json(Json& j, const VisibilityContract& c) {
  j = {{"allowed_tools", c.allowed_tools},
       {"known_tools", c.known_tools},
       {"visible_paths", c.visible_paths},
       {"hidden_identifiers", c.hidden_identifiers},
       {"target_paths", c.target_paths},
       {"shadow_paths", c.shadow_paths},
       {"hidden_verifier_available", c.hidden_verifier_available}};
}

void from_json(const Json& j, VisibilityContract& c) {
  c.allowed_tools = j.at("allowed_tools").get<std::vector<std::string>>();
  c.known_tools = j.at("known_tools").get<std::vector<std::string>>();
  c.visible_paths = j.at("visible_paths").get<std::vector<std::string>>();
  c.hidden_identifiers = j.at("hidden_identifiers").get<std::vector<std::string>>();
  c.target_paths = j.at("target_paths").get<std::vector<std::string>>();
  c.shadow_paths = j.at("shadow_paths").get<std::vector<std::string>>();
  c.hidden_verifier_available = j.at("hidden_verifier_available");
}

void to_json(Json& j, const SkillComponents& c) {
  j = {{"L", c.lesson_coverage},    {"G", c.grounding},          {"R_p", c.parent_retention},
       {"A_act", c.actionability},  {"V_s", c.safety_validity},  {"N", c.non_redundancy},
       {"D", c.mutation_conservatism}, {"M_keep", c.retention_gate}};
}

void from_json(const Json& j, SkillComponents& c) {
  c.lesson_coverage = j.at("L");
  c.grounding = j.at("G");
  c.parent_retention = j.at("R_p");
  c.actionability = j.at("A_act");
  c.safety_validity = j.at("V_s");
  c.non_redundancy = j.at("N");
  c.mutation_conservatism = j.at("D");
  c.retention_gate = j.at("M_keep");
}

void to_json(Json& j, const SanitizerReport& r) {
  Json spans = Json::array();
  for (const auto& s : r.removed_spans) spans.push_back({{"reason", s.reason}, {"excerpt_hash", s.excerpt_hash}});
  j = {{"repairs", r.repairs}, {"invalid_reasons", r.invalid_reasons}, {"removed_spans", spans}};
}

void from_json(const Json& j, SanitizerReport& r) {
  r.repairs = j.at("repairs").get<std::vector<std::string>>();
  r.invalid_reasons = j.at("invalid_reasons").get<std::vector<std::string>>();
  r.removed_spans.clear();
  for (const auto& s : j.at("removed_spans")) r.removed_spans.push_back({s.at("reason"), s.at("excerpt_hash")});
}

void to_json(Json& j, const MutationHealth& h) {
  j = {{"child_slot", h.child_slot},
       {"parent_id", h.parent_id},
       {"ok", h.ok},
       {"has_oracle_feedback", h.has_oracle_feedback},
       {"similarity", h.similarity},
       {"coverage", h.coverage},
       {"parent_coverage", h.parent_coverage},
       {"missing_critical", h.missing_critical},
       {"parent_missing", h.parent_missing},
       {"remove_violation", h.remove_violation},
       {"contradiction", h.contradiction},
       {"repair_attempted", h.repair_attempted}};
}

void from_json(const Json& j, MutationHealth& h) {
  h.child_slot = j.at("child_slot");
  h.parent_id = j.at("parent_id");
  h.ok = j.at("ok");
  h.has_oracle_feedback = j.at("has_oracle_feedback");
  h.similarity = j.at("similarity");
  h.coverage = j.at("coverage");
  h.parent_coverage = j.at("parent_coverage");
  h.missing_critical = j.at("missing_critical");
  h.parent_missing = j.at("parent_missing");
  h.remove_violation = j.at("remove_violation");
  h.contradiction = j.at("contradiction");
  h.repair_attempted = j.at("repair_attempted");
}

}  // namespace skillevo
