#include "skillevo/replay.hpp"

#include <fmt/format.h>

#include <map>
#include <optional>

#include "skillevo/evolution.hpp"
#include "skillevo/serialization.hpp"

namespace skillevo {
namespace {

struct StoredCandidate {
  std::string skill_id;
  int slot = 0;
  bool valid = true;
  bool carried = false;
  std::optional<double> parent_skill_q;
  ScoringRecord scoring;
  SkillComponents components;
  Json metrics;
};

class DiffSink {
 public:
  explicit DiffSink(std::vector<MetricDiff>& out) : out_(out) {}

  template <typename T>
  void check(int generation, const std::string& subject, const std::string& field, const Json& stored,
             const T& recomputed) {
    const Json r = recomputed;
    if (stored != r) out_.push_back({generation, subject, field, stored, r});
  }

 private:
  std::vector<MetricDiff>& out_;
};

StoredCandidate parse_candidate(const Json& j) {
  try {
    StoredCandidate c;
    c.skill_id = j.at("skill_id");
    c.slot = j.at("slot");
    c.valid = j.at("validity") == "valid";
    c.carried = j.at("carried");
    if (!j.at("parent_skill_q").is_null()) c.parent_skill_q = j.at("parent_skill_q").get<double>();
    c.scoring = scoring_from_json(j.at("scoring"));
    c.components = j.at("skill_q_components").get<SkillComponents>();
    c.metrics = j;
    return c;
  } catch (const Json::exception& e) {
    throw SchemaDrift(fmt::format("generation_metrics candidate: {}", e.what()));
  }
}

void compare_components(DiffSink& sink, int g, const std::string& id, const SkillComponents& stored,
                        const SkillComponents& fresh) {
  const Json s = stored;
  const Json f = fresh;
  for (const auto& [key, value] : s.items()) sink.check(g, id, "skill_q." + key, value, f.at(key));
}

}  // namespace

bool ReplayResult::survivors_match() const {
  for (const auto& g : generations) {
    if (g.stored_survivor != g.replayed_survivor) return false;
  }
  return true;
}

std::string format_diff(const MetricDiff& d) {
  return fmt::format("gen{} {} {}: stored={} recomputed={}", d.generation, d.subject, d.field, d.stored.dump(),
                     d.recomputed.dump());
}

ReplayResult replay_metrics(const std::filesystem::path& run_root) {
  RunDirectory run(run_root);
  RunConfig config;
  VisibilityContract contract;
  try {
    config = run.read_json(ArtifactFamily::kRunConfig).get<RunConfig>();
    contract = run.read_json(ArtifactFamily::kExecutionContract).get<VisibilityContract>();
  } catch (const Json::exception& e) {
    throw SchemaDrift(fmt::format("run header: {}", e.what()));
  }
  const auto gens = run.generations();
  if (gens.empty()) throw MissingArtifact(ArtifactFamily::kGenerationMetrics, run.path_for(ArtifactFamily::kGenerationMetrics, 0));

  const TraceRubricEstimator progress_estimator;
  const TextRubricSkillEstimator skill_estimator;
  const EstimationContext est{config.turn_cap, contract.target_paths, contract.shadow_paths};
  const double epsilon = compute_epsilon(config.repeats, config.task_count);

  ReplayResult result;
  DiffSink sink(result.diffs);
  std::map<std::string, SkillComponents> known;

  for (int g : gens) {
    run.check_generation_complete(g);
    const Json metrics = run.read_json(ArtifactFamily::kGenerationMetrics, g);
    const Json fitness = run.read_json(ArtifactFamily::kCombinedSelectionFitness, g);
    sink.check(g, "generation", "epsilon", metrics.at("epsilon"), epsilon);
    sink.check(g, "generation", "fitness.epsilon", fitness.at("epsilon"), epsilon);

    std::vector<StoredCandidate> candidates;
    for (const auto& c : metrics.at("candidates")) candidates.push_back(parse_candidate(c));
    std::map<int, std::vector<RolloutRecord>> by_slot;
    for (const auto& line : run.read_lines(ArtifactFamily::kRolloutDiagnostics, g)) {
      RolloutRecord record;
      try {
        record = line.at("record").get<RolloutRecord>();
      } catch (const Json::exception& e) {
        throw SchemaDrift(fmt::format("rollout_diagnostics: {}", e.what()));
      }
      const auto fresh = progress_estimator.estimate(record, est);
      const std::string subject = fmt::format("{}#r{}", record.skill_id, record.repeat_index);
      sink.check(g, subject, "progress_components", Json(record.progress), Json(fresh));
      sink.check(g, subject, "progress_score", line.at("progress_score"), compute_progress(fresh));
      record.progress = fresh;
      by_slot[line.at("slot").get<int>()].push_back(std::move(record));
    }

    ReplayedGeneration rg;
    rg.generation = g;
    for (const auto& c : candidates) {
      const std::string body = run.read_text(ArtifactFamily::kSkillDocument, g, c.skill_id);
      SkillComponents components;
      if (known.contains(c.skill_id)) {
        components = known.at(c.skill_id);
      } else if (c.scoring.copied_from) {
        if (!known.contains(*c.scoring.copied_from)) {
          throw SchemaDrift(fmt::format("{} copies unknown skill {}", c.skill_id, *c.scoring.copied_from));
        }
        components = known.at(*c.scoring.copied_from);
      } else {
        const int created = c.scoring.created_generation;
        const int source_gen = created == 0 ? 0 : created - 1;
        std::optional<std::string> parent_body;
        if (c.scoring.parent_id) parent_body = run.read_text(ArtifactFamily::kSkillDocument, source_gen, *c.scoring.parent_id);
        const LessonBank bank_at =
            created == 0 ? LessonBank{} : parse_lesson_bank(run.read_text(ArtifactFamily::kLessonBank, created - 1));
        SkillScoringInput input;
        input.body = body;
        if (parent_body) input.parent_body = *parent_body;
        input.bank = &bank_at;
        input.oracle_directives = c.scoring.oracle_directives;
        input.contract = &contract;
        input.sanitizer_valid = c.scoring.sanitizer_valid;
        input.sanitizer_repaired = c.scoring.sanitizer_repaired;
        components = skill_estimator.estimate(input);
      }
      known[c.skill_id] = components;
      compare_components(sink, g, c.skill_id, c.components, components);
      const SkillScore score = compute_skill_q(components);
      sink.check(g, c.skill_id, "SkillQ_raw", c.metrics.at("SkillQ_raw"), score.raw);
      sink.check(g, c.skill_id, "SkillQ", c.metrics.at("SkillQ"), score.gated);

      const auto& rollouts = by_slot[c.slot];
      if (static_cast<int>(rollouts.size()) != config.repeats) {
        throw SchemaDrift(fmt::format("gen{} slot {} has {} rollouts, expected {}", g, c.slot, rollouts.size(),
                                      config.repeats));
      }
      CandidateInputs in;
      in.skill_id = c.skill_id;
      in.slot = c.slot;
      in.rollouts = rollouts;
      in.repeats = config.repeats;
      in.skill = score;
      in.validity = {c.valid, score.gated, c.parent_skill_q, c.carried || !c.parent_skill_q};
      rg.evaluations.push_back(evaluate_candidate(in, config.semantic_floor_tau, epsilon));
    }

    const auto& stored_fit = fitness.at("candidates");
    if (stored_fit.size() != rg.evaluations.size()) {
      throw SchemaDrift(fmt::format("gen{} fitness lists {} candidates, metrics list {}", g, stored_fit.size(),
                                    rg.evaluations.size()));
    }
    for (std::size_t i = 0; i < rg.evaluations.size(); ++i) {
      const auto& e = rg.evaluations[i];
      const auto& s = stored_fit[i];
      const auto& m = candidates[i].metrics;
      sink.check(g, e.skill_id, "skill_id", s.at("skill_id"), e.skill_id);
      sink.check(g, e.skill_id, "pass@1", s.at("pass@1"), e.pass_rate);
      sink.check(g, e.skill_id, "SelectQ", s.at("SelectQ"), e.select_q);
      sink.check(g, e.skill_id, "robust_utility", s.at("robust_utility"), e.robust_utility);
      sink.check(g, e.skill_id, "fitness.SkillQ", s.at("SkillQ"), e.skill_q);
      sink.check(g, e.skill_id, "AgentBehaviorQ", s.at("AgentBehaviorQ"), e.progress.agent_progress_q);
      sink.check(g, e.skill_id, "AgentVarianceQ", s.at("AgentVarianceQ"), e.progress.agent_variance_q);
      sink.check(g, e.skill_id, "progress_lcb95", s.at("progress_lcb95"), e.progress.lcb);
      sink.check(g, e.skill_id, "progress_mean", s.at("progress_mean"), e.progress.mean);
      sink.check(g, e.skill_id, "invalid", s.at("invalid"), e.invalid);
      sink.check(g, e.skill_id, "progress_std", m.at("progress_std"), e.progress.stddev);
      sink.check(g, e.skill_id, "invalid_cause", m.at("invalid_cause"), std::string(to_string(e.invalid_cause)));
    }
    rg.stored_survivor = fitness.at("survivor_id");
    rg.replayed_survivor = select_survivor(rg.evaluations, candidates.front().skill_id);
    result.generations.push_back(std::move(rg));
  }
  return result;
}

}  // namespace skillevo
