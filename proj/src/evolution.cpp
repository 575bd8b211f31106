#include "skillevo/evolution.hpp"

#include <fmt/chrono.h>
#include <fmt/format.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>

#include "skillevo/serialization.hpp"

namespace skillevo {
namespace {

std::string one_line(const std::string& text) {
  std::string out;
  for (const auto& line : split_lines(text)) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::string utc_now() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(
                                                  std::chrono::system_clock::now())));
}

std::string host_name() {
  char buffer[256] = {};
  if (gethostname(buffer, sizeof(buffer) - 1) != 0) return "unknown";
  return buffer;
}

EstimationContext estimation_context(const LoopContext& ctx) {
  return {ctx.config.turn_cap, ctx.contract.target_paths, ctx.contract.shadow_paths};
}

Member score_member(Skill skill, ScoringRecord scoring, const std::optional<std::string>& parent_body,
                    std::optional<double> parent_skill_q, const LoopContext& ctx) {
  SkillScoringInput input;
  input.body = skill.body;
  if (parent_body) input.parent_body = *parent_body;
  input.bank = &ctx.bank;
  input.oracle_directives = scoring.oracle_directives;
  input.contract = &ctx.contract;
  input.sanitizer_valid = scoring.sanitizer_valid;
  input.sanitizer_repaired = scoring.sanitizer_repaired;
  Member m;
  m.components = ctx.services->skill_estimator->estimate(input);
  m.score = compute_skill_q(m.components);
  m.skill = std::move(skill);
  m.scoring = std::move(scoring);
  m.parent_skill_q = parent_skill_q;
  return m;
}

Member parent_copy(const Member& survivor, int generation, int slot) {
  Member copy = survivor;
  copy.skill.skill_id = individual_id(generation, slot);
  copy.skill.generation = generation;
  copy.skill.slot = slot;
  copy.skill.parent_id = survivor.skill.skill_id;
  copy.skill.origin = SkillOrigin::kCarriedParent;
  copy.scoring.created_generation = generation;
  copy.scoring.parent_id = survivor.skill.skill_id;
  copy.scoring.copied_from = survivor.skill.skill_id;
  copy.parent_skill_q = survivor.score.gated;
  copy.carried = true;
  return copy;
}

std::vector<Directive> directives_from(const MutationHandoff* handoff) {
  std::vector<Directive> out;
  if (handoff == nullptr) return out;
  for (const auto& t : handoff->keep) out.push_back({DirectiveTag::kKeep, t});
  for (const auto& t : handoff->add) out.push_back({DirectiveTag::kAdd, t});
  for (const auto& t : handoff->remove) out.push_back({DirectiveTag::kRemoveCheck, t});
  return out;
}

std::vector<Member> make_children(int generation, const Member& survivor, const MutationHandoff* handoff,
                                  const std::vector<std::string>& oracle_directives, LoopContext& ctx) {
  std::vector<Member> out;
  const Matcher& matcher = *ctx.services->matcher;
  for (int slot = 1; slot < ctx.config.population_size; ++slot) {
    std::string proposal;
    try {
      proposal = ctx.services->mutator->propose({generation, slot, &survivor.skill, handoff, &ctx.bank, &ctx.contract,
                                                 ctx.config.mutator_temperature});
    } catch (const MutatorFailure& e) {
      if (ctx.run) {
        ctx.run->write(ArtifactFamily::kMutationHealth, generation,
                       {{"child_slot", slot},
                        {"parent_id", survivor.skill.skill_id},
                        {"ok", false},
                        {"mutator_failure", e.what()},
                        {"accepted", false}});
      }
      out.push_back(parent_copy(survivor, generation, slot));
      continue;
    }

    Skill child;
    child.skill_id = child_id(generation, slot);
    child.generation = generation;
    child.slot = slot;
    child.parent_id = survivor.skill.skill_id;
    child.body = std::move(proposal);
    child.directives = directives_from(handoff);
    child.origin = SkillOrigin::kMutatedChild;

    auto sanitized = sanitize(child, ctx.contract, ctx.bank, matcher);
    const auto health =
        compute_mutation_health(sanitized.skill, survivor.skill, ctx.bank, oracle_directives, sanitized.report, matcher);

    if (ctx.run) {
      ctx.run->write(ArtifactFamily::kSkillSanitization, generation,
                     {{"skill_id", child.skill_id},
                      {"slot", slot},
                      {"origin", to_string(sanitized.skill.origin)},
                      {"valid", sanitized.report.valid()},
                      {"report", sanitized.report}});
      std::vector<std::string> integrated;
      std::vector<std::string> missing;
      for (const auto& d : oracle_directives) {
        (matcher.contains(sanitized.skill.body, d) ? integrated : missing).push_back(d);
      }
      ctx.run->write(ArtifactFamily::kSkillIntegration, generation,
                     {{"skill_id", child.skill_id}, {"slot", slot}, {"integrated", integrated}, {"missing", missing}});
      Json h = health;
      h["skill_id"] = child.skill_id;
      h["accepted"] = health.ok;
      ctx.run->write(ArtifactFamily::kMutationHealth, generation, h);
    }

    if (!health.ok) {
      out.push_back(parent_copy(survivor, generation, slot));
      continue;
    }
    ScoringRecord scoring{generation, survivor.skill.skill_id, std::nullopt, oracle_directives,
                          sanitized.report.valid(), sanitized.report.repaired()};
    out.push_back(score_member(std::move(sanitized.skill), std::move(scoring), survivor.skill.body,
                               survivor.score.gated, ctx));
  }
  return out;
}

Json candidate_metrics(const Member& m, const CandidateEvaluation& e) {
  Json j = {{"slot", e.slot},
            {"skill_id", m.skill.skill_id},
            {"parent_id", m.skill.parent_id ? Json(*m.skill.parent_id) : Json(nullptr)},
            {"origin", to_string(m.skill.origin)},
            {"validity", m.skill.valid() ? "valid" : "invalid"},
            {"invalid_reasons", m.skill.invalid_reasons},
            {"carried", m.carried},
            {"scoring", to_json(m.scoring)},
            {"skill_q_components", m.components},
            {"SkillQ_raw", m.score.raw},
            {"SkillQ", m.score.gated},
            {"parent_skill_q", m.parent_skill_q ? Json(*m.parent_skill_q) : Json(nullptr)},
            {"pass@1", e.pass_rate},
            {"progress_scores", e.progress.scores},
            {"progress_mean", e.progress.mean},
            {"progress_std", e.progress.stddev},
            {"progress_lcb95", e.progress.lcb},
            {"AgentBehaviorQ", e.progress.agent_progress_q},
            {"AgentVarianceQ", e.progress.agent_variance_q},
            {"robust_utility", e.robust_utility},
            {"invalid", e.invalid},
            {"invalid_cause", to_string(e.invalid_cause)},
            {"SelectQ", e.select_q}};
  return j;
}

Json candidate_fitness(const CandidateEvaluation& e) {
  return {{"ind", e.slot},
          {"skill_id", e.skill_id},
          {"pass@1", e.pass_rate},
          {"SelectQ", e.select_q},
          {"robust_utility", e.robust_utility},
          {"SkillQ", e.skill_q},
          {"AgentBehaviorQ", e.progress.agent_progress_q},
          {"AgentVarianceQ", e.progress.agent_variance_q},
          {"progress_lcb95", e.progress.lcb},
          {"progress_mean", e.progress.mean},
          {"invalid", e.invalid}};
}

void write_generation(const GenerationRecord& rec, const LoopContext& ctx, double epsilon) {
  RunDirectory& run = *ctx.run;
  const int g = rec.generation;
  for (std::size_t i = 0; i < rec.rollouts.size(); ++i) {
    const auto& r = rec.rollouts[i];
    run.write(ArtifactFamily::kRolloutDiagnostics, g,
              {{"task_id", r.task_id},
               {"category_id", ctx.task->category_id},
               {"skill_id", r.skill_id},
               {"slot", static_cast<int>(i) / ctx.config.repeats},
               {"repeat_index", r.repeat_index},
               {"outcome", r.final_outcome.passed ? "pass" : "fail"},
               {"reward", r.final_outcome.passed ? 1.0 : 0.0},
               {"phase", phase_label(r.phase_reached)},
               {"num_tool_calls", r.events.size()},
               {"feedback_calls", r.feedback_calls_used},
               {"progress_score", compute_progress(r.progress)},
               {"record", r}});
  }
  Json candidates = Json::array();
  Json fitness = Json::array();
  for (std::size_t i = 0; i < rec.population.size(); ++i) {
    candidates.push_back(candidate_metrics(rec.population[i], rec.evaluations[i]));
    fitness.push_back(candidate_fitness(rec.evaluations[i]));
    run.write_text(ArtifactFamily::kSkillDocument, g, rec.population[i].skill.body, rec.population[i].skill.skill_id);
  }
  run.write(ArtifactFamily::kGenerationMetrics, g,
            {{"generation", g},
             {"task_id", rec.task_id},
             {"repeats", ctx.config.repeats},
             {"task_count", ctx.config.task_count},
             {"semantic_floor_tau", ctx.config.semantic_floor_tau},
             {"epsilon", epsilon},
             {"candidates", candidates}});
  run.write(ArtifactFamily::kCombinedSelectionFitness, g,
            {{"generation", g},
             {"survivor_id", rec.survivor_id},
             {"survivor_slot", rec.survivor_index},
             {"epsilon", epsilon},
             {"candidates", fitness}});
  run.write_text(ArtifactFamily::kSurvivorSkill, g, rec.population[rec.survivor_index].skill.body);
}

Json preflight(const Task& task, const RunConfig& config, const VisibilityContract& contract) {
  Json checks = Json::array();
  bool all_ok = true;
  auto check = [&](const char* name, bool ok, std::string detail) {
    checks.push_back({{"name", name}, {"ok", ok}, {"detail", std::move(detail)}});
    all_ok = all_ok && ok;
  };
  check("config", check_run_config(config).empty(), "run configuration invariants");
  check("environment", task.environment != nullptr, task.task_id);
  check("targets", !contract.target_paths.empty(), fmt::format("{} target path(s)", contract.target_paths.size()));
  check("hidden_verifier", contract.hidden_verifier_available, "final verification available");
  check("feedback_tool", contract.tool_allowed("verify_feedback") == config.dense_feedback_enabled,
        config.dense_feedback_enabled ? "verify_feedback enabled" : "verify_feedback disabled");
  return {{"checks", checks}, {"ok", all_ok}};
}

}  // namespace

Json to_json(const ScoringRecord& s) {
  return {{"created_generation", s.created_generation},
          {"parent_id", s.parent_id ? Json(*s.parent_id) : Json(nullptr)},
          {"copied_from", s.copied_from ? Json(*s.copied_from) : Json(nullptr)},
          {"oracle_directives", s.oracle_directives},
          {"sanitizer_valid", s.sanitizer_valid},
          {"sanitizer_repaired", s.sanitizer_repaired}};
}

ScoringRecord scoring_from_json(const Json& j) {
  ScoringRecord s;
  s.created_generation = j.at("created_generation");
  if (!j.at("parent_id").is_null()) s.parent_id = j.at("parent_id").get<std::string>();
  if (!j.at("copied_from").is_null()) s.copied_from = j.at("copied_from").get<std::string>();
  s.oracle_directives = j.at("oracle_directives").get<std::vector<std::string>>();
  s.sanitizer_valid = j.at("sanitizer_valid");
  s.sanitizer_repaired = j.at("sanitizer_repaired");
  return s;
}

Services rule_based_services(AgentFactory agent_factory, int parallelism) {
  Services s;
  s.executor = std::make_shared<LocalRolloutExecutor>(std::move(agent_factory), parallelism);
  s.oracle = std::make_shared<RuleBasedOracle>();
  s.mutator = std::make_shared<RuleBasedMutator>();
  return s;
}

Skill make_seed_skill(std::string body) {
  Skill s;
  s.skill_id = seed_skill_id();
  s.body = std::move(body);
  s.origin = SkillOrigin::kSeed;
  return s;
}

LoopContext make_loop_context(const Task& task, const RunConfig& config, Services& services, RunDirectory* run) {
  if (!task.environment) throw std::invalid_argument("task has no environment: " + task.task_id);
  LoopContext ctx;
  ctx.task = &task;
  ctx.config = config;
  ctx.services = &services;
  ctx.run = run;
  ctx.contract = execution_contract(*task.environment, config.dense_feedback_enabled);
  return ctx;
}

std::vector<Member> initial_population(const Skill& seed, LoopContext& ctx) {
  Skill s = seed;
  s.skill_id = seed_skill_id();
  s.generation = 0;
  s.slot = 0;
  s.parent_id.reset();
  s.origin = SkillOrigin::kSeed;
  auto sanitized = sanitize(s, ctx.contract, ctx.bank, *ctx.services->matcher);
  ScoringRecord scoring{0, std::nullopt, std::nullopt, {}, sanitized.report.valid(), sanitized.report.repaired()};
  if (ctx.run) {
    ctx.run->write(ArtifactFamily::kSkillSanitization, 0,
                   {{"skill_id", s.skill_id},
                    {"slot", 0},
                    {"origin", to_string(sanitized.skill.origin)},
                    {"valid", sanitized.report.valid()},
                    {"report", sanitized.report}});
  }
  std::vector<Member> population;
  population.push_back(score_member(std::move(sanitized.skill), std::move(scoring), std::nullopt, std::nullopt, ctx));
  if (!ctx.config.ea_enabled) return population;
  auto children = make_children(0, population.front(), nullptr, {}, ctx);
  population.insert(population.end(), children.begin(), children.end());
  return population;
}

GenerationRecord run_generation(int generation, std::vector<Member> population, LoopContext& ctx) {
  const int expected = ctx.config.ea_enabled ? ctx.config.population_size : 1;
  if (static_cast<int>(population.size()) != expected) {
    throw InvalidConfig(std::vector<ConfigViolation>{{"population_size", fmt::format("population has {} members, expected {}",
                                                         population.size(), expected)}});
  }
  const int repeats = ctx.config.repeats;
  GenerationRecord rec;
  rec.generation = generation;
  rec.task_id = ctx.task->task_id;
  rec.population = std::move(population);

  std::vector<RolloutJob> jobs;
  for (const auto& m : rec.population) {
    for (int r = 0; r < repeats; ++r) jobs.push_back({ctx.task, &m.skill, r});
  }
  rec.rollouts = ctx.services->executor->execute(jobs, rollout_settings(ctx.config));
  if (rec.rollouts.size() != jobs.size()) throw std::runtime_error("executor returned the wrong number of rollouts");
  const auto est = estimation_context(ctx);
  for (auto& r : rec.rollouts) r.progress = ctx.services->progress_estimator->estimate(r, est);

  const double epsilon = compute_epsilon(repeats, ctx.config.task_count);
  for (std::size_t i = 0; i < rec.population.size(); ++i) {
    const auto& m = rec.population[i];
    CandidateInputs in;
    in.skill_id = m.skill.skill_id;
    in.slot = static_cast<int>(i);
    in.rollouts = std::span<const RolloutRecord>(rec.rollouts).subspan(i * repeats, repeats);
    in.repeats = repeats;
    in.skill = m.score;
    in.validity = {m.skill.valid(), m.score.gated, m.parent_skill_q, m.carried || !m.parent_skill_q};
    rec.evaluations.push_back(evaluate_candidate(in, ctx.config.semantic_floor_tau, epsilon));
  }
  // Slot 0 (seed or carried survivor) is the fallback when every candidate is invalid.
  rec.survivor_id = select_survivor(rec.evaluations, rec.population.front().skill.skill_id);
  for (std::size_t i = 0; i < rec.population.size(); ++i) {
    if (rec.population[i].skill.skill_id == rec.survivor_id) {
      rec.survivor_index = i;
      break;
    }
  }
  if (ctx.run) write_generation(rec, ctx, epsilon);
  return rec;
}

void summarize_generation(GenerationRecord& rec, LoopContext& ctx) {
  if (rec.summarized) return;
  OracleInput input;
  input.generation = rec.generation;
  input.task = ctx.task;
  const std::size_t repeats = static_cast<std::size_t>(ctx.config.repeats);
  for (std::size_t i = 0; i < rec.population.size(); ++i) {
    input.candidates.push_back({&rec.population[i].skill, &rec.evaluations[i],
                                std::span<const RolloutRecord>(rec.rollouts).subspan(i * repeats, repeats)});
  }
  input.survivor = &rec.population[rec.survivor_index].skill;
  input.bank = &ctx.bank;
  input.contract = &ctx.contract;
  input.temperature = ctx.config.oracle_temperature;

  OracleSummary summary;
  try {
    summary = ctx.services->oracle->summarize(input);
  } catch (const OracleFailure&) {
    summary = OracleSummary{};
    fill_selection_stats(input, summary);
  }
  for (auto* list : {&summary.keep, &summary.add, &summary.remove, &summary.critical, &summary.from_invalid}) {
    for (auto& text : *list) text = one_line(text);
  }

  auto bank_lessons = [&](const std::vector<std::string>& texts, LessonTag tag) {
    for (const auto& text : texts) {
      if (text.empty()) continue;
      const bool invalid_only =
          std::find(summary.from_invalid.begin(), summary.from_invalid.end(), text) != summary.from_invalid.end();
      const auto index = ctx.bank.add({tag, text, rec.generation, invalid_only});
      const bool critical =
          std::find(summary.critical.begin(), summary.critical.end(), text) != summary.critical.end();
      if (critical && tag != LessonTag::kRemove) ctx.bank.mark_critical(index);
    }
  };
  bank_lessons(summary.keep, LessonTag::kKeep);
  bank_lessons(summary.add, LessonTag::kAdd);
  bank_lessons(summary.remove, LessonTag::kRemove);

  rec.oracle_summary = std::move(summary);
  rec.lesson_bank_after = ctx.bank;
  rec.summarized = true;
  if (ctx.run) {
    ctx.run->write_text(ArtifactFamily::kOracleFeedback, rec.generation, render_oracle_feedback(rec.oracle_summary));
    ctx.run->write_text(ArtifactFamily::kLessonBank, rec.generation, render_lesson_bank(ctx.bank, rec.generation));
  }
}

std::vector<Member> build_next_population(GenerationRecord& rec, LoopContext& ctx) {
  summarize_generation(rec, ctx);
  const Member& survivor = rec.population[rec.survivor_index];
  const auto& best = rec.evaluations[rec.survivor_index];
  const auto& carried = rec.evaluations.front();

  MutationHandoff handoff;
  handoff.generation = rec.generation;
  handoff.survivor_id = rec.survivor_id;
  handoff.selection_delta = best.select_q - carried.select_q;
  handoff.pass_delta = best.pass_rate - carried.pass_rate;
  handoff.progress_delta = best.progress.agent_progress_q - carried.progress.agent_progress_q;
  handoff.lesson_bank_ref = fmt::format("gen{}/lesson_bank.md", rec.generation);
  handoff.keep = rec.oracle_summary.keep;
  handoff.add = rec.oracle_summary.add;
  handoff.remove = rec.oracle_summary.remove;
  for (const auto& l : ctx.bank.critical_lessons()) handoff.critical.push_back(l.text);
  rec.handoff = handoff;
  if (ctx.run) ctx.run->write_text(ArtifactFamily::kMutationHandoff, rec.generation, render_mutation_handoff(handoff));

  const int next = rec.generation + 1;
  std::vector<Member> population;
  Member parent = survivor;
  parent.skill.generation = next;
  parent.skill.slot = 0;
  parent.carried = true;
  population.push_back(std::move(parent));

  std::vector<std::string> directives = rec.oracle_summary.keep;
  directives.insert(directives.end(), rec.oracle_summary.add.begin(), rec.oracle_summary.add.end());
  auto children = make_children(next, survivor, &*rec.handoff, directives, ctx);
  population.insert(population.end(), children.begin(), children.end());
  return population;
}

TaskHistory run_task(const Task& task, const Skill& seed, const RunConfig& config, Services& services,
                     const std::optional<std::filesystem::path>& run_root, const std::string& condition) {
  TaskHistory history;
  history.task_id = task.task_id;
  std::unique_ptr<RunDirectory> run;
  Json status = {{"state", "running"},
                 {"task_id", task.task_id},
                 {"condition", condition},
                 {"started_at", utc_now()},
                 {"host", host_name()}};
  try {
    validate_task(task);
    auto ctx = make_loop_context(task, config, services, nullptr);
    if (run_root) {
      run = std::make_unique<RunDirectory>(*run_root);
      ctx.run = run.get();
      Json cfg = config;
      cfg["condition"] = condition;
      cfg["task_id"] = task.task_id;
      run->write(ArtifactFamily::kRunConfig, -1, cfg);
      run->write(ArtifactFamily::kExecutionContract, -1, ctx.contract);
      run->write(ArtifactFamily::kPreflightReport, -1, preflight(task, config, ctx.contract));
      run->write(ArtifactFamily::kStatus, -1, status);
    }

    auto population = initial_population(seed, ctx);
    const int generations = config.ea_enabled ? config.generations : 1;
    for (int g = 0; g < generations; ++g) {
      auto record = run_generation(g, std::move(population), ctx);
      if (g + 1 < generations) {
        population = build_next_population(record, ctx);
      } else {
        summarize_generation(record, ctx);
      }
      history.generations.push_back(std::move(record));
    }
    const auto& last = history.generations.back();
    history.final_survivor = last.population[last.survivor_index].skill;
    status["state"] = "completed";
    status["final_survivor_id"] = last.survivor_id;
  } catch (const InvalidConfig&) {
    throw;
  } catch (const std::exception& e) {
    history.error = e.what();
    status["state"] = "failed";
    status["error"] = e.what();
  }
  if (run) {
    status["finished_at"] = utc_now();
    run->write(ArtifactFamily::kStatus, -1, status);
  }
  return history;
}

std::vector<TaskHistory> run_experiment(const std::vector<Task>& tasks, const std::vector<Skill>& seeds,
                                        const RunConfig& config, Services& services,
                                        const std::optional<std::filesystem::path>& output_root,
                                        const std::string& condition) {
  validate_run_config(config);
  if (seeds.size() != tasks.size() && seeds.size() != 1) {
    throw InvalidConfig(std::vector<ConfigViolation>{{"seed_skills", "need one seed skill per task or a single shared seed"}});
  }
  std::vector<TaskHistory> out;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const Skill& seed = seeds.size() == 1 ? seeds.front() : seeds[i];
    std::optional<std::filesystem::path> root;
    if (output_root) root = *output_root / tasks[i].task_id;
    out.push_back(run_task(tasks[i], seed, config, services, root, condition));
  }
  return out;
}

}  // namespace skillevo
