#include "doctest.h"

#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "skillevo/evolution.hpp"
#include "skillevo/scripted_agent.hpp"

using namespace skillevo;

namespace {

RunConfig config(int k, int g, int r, bool ea = true, bool dense = true) {
  RunConfig c;
  c.population_size = k;
  c.generations = g;
  c.repeats = r;
  c.ea_enabled = ea;
  c.dense_feedback_enabled = dense;
  c.seed = 20260315;
  return c;
}

Skill default_seed() { return make_seed_skill(read_file(fixtures::asset("skills/seed/default.md"))); }

Task fifo_task() { return make_task(load_scenario(fixtures::asset("scenarios/rtl_sync_fifo.json"))); }

class FailingMutator final : public Mutator {
 public:
  std::string propose(const MutationRequest&) override { throw MutatorFailure("model unavailable"); }
};

class FailingOracle final : public Oracle {
 public:
  OracleSummary summarize(const OracleInput&) override { throw OracleFailure("model unavailable"); }
};

// Drops everything but one generic line, so any critical lesson goes missing.
class TruncatingMutator final : public Mutator {
 public:
  std::string propose(const MutationRequest&) override { return "- Compile after every edit.\n"; }
};

std::size_t rollout_count(const TaskHistory& h) {
  std::size_t n = 0;
  for (const auto& g : h.generations) n += g.rollouts.size();
  return n;
}

std::map<std::string, std::string> snapshot(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root)) {
    if (!e.is_regular_file() || e.path().filename().string().rfind("status", 0) == 0) continue;
    out[std::filesystem::relative(e.path(), root).string()] = read_file(e.path());
  }
  return out;
}

}  // namespace

TEST_CASE("one generation runs exactly K*R rollouts") {
  auto services = rule_based_services(scripted_agent_factory(), 1);
  const Task task = fifo_task();
  const auto h = run_task(task, default_seed(), config(4, 1, 4), services, std::nullopt);
  REQUIRE_FALSE(h.error.has_value());
  REQUIRE(h.generations.size() == 1);
  CHECK(h.generations[0].rollouts.size() == 16);
  CHECK(h.generations[0].population.size() == 4);
  CHECK(h.generations[0].population[0].skill.origin == SkillOrigin::kSeed);
  const auto& seed_id = h.generations[0].population[0].skill.skill_id;
  CHECK(seed_id == individual_id(0, 0));
  for (std::size_t i = 1; i < 4; ++i) CHECK(h.generations[0].population[i].skill.parent_id == seed_id);
}

TEST_CASE("a singleton always-pass population selects itself") {
  auto services = rule_based_services(scripted_agent_factory(ScriptedPolicy::kGolden), 1);
  const auto h = run_task(fifo_task(), default_seed(), config(1, 1, 1), services, std::nullopt);
  REQUIRE(h.generations.size() == 1);
  const auto& e = h.generations[0].evaluations.at(0);
  CHECK(h.generations[0].survivor_id == e.skill_id);
  CHECK(e.pass_rate == 1.0);
  CHECK(e.select_q == doctest::Approx(1.0 + compute_epsilon(1, 1) * e.robust_utility).epsilon(1e-12));
}

TEST_CASE("loop invariants over five generations") {
  auto services = rule_based_services(scripted_agent_factory(), 1);
  const auto h = run_task(fifo_task(), default_seed(), config(4, 5, 4), services, std::nullopt);
  REQUIRE_FALSE(h.error.has_value());
  REQUIRE(h.generations.size() == 5);
  CHECK(rollout_count(h) == 80);
  std::vector<Skill> all;
  double last_q = -2.0;
  for (std::size_t g = 0; g < h.generations.size(); ++g) {
    const auto& rec = h.generations[g];
    CHECK(rec.population.size() == 4);
    const auto& survivor = rec.evaluations[rec.survivor_index];
    CHECK(survivor.skill_id == rec.survivor_id);
    CHECK(survivor.select_q >= last_q);
    last_q = survivor.select_q;
    for (const auto& m : rec.population) all.push_back(m.skill);
    if (g + 1 < h.generations.size()) {
      const auto& next = h.generations[g + 1];
      CHECK(next.population[0].skill.skill_id == rec.survivor_id);
      CHECK(next.population[0].skill.body == rec.population[rec.survivor_index].skill.body);
      for (std::size_t i = 1; i < next.population.size(); ++i) {
        CHECK(next.population[i].skill.parent_id == rec.survivor_id);
      }
    }
  }
  CHECK_NOTHROW(check_lineage(all));
}

TEST_CASE("failed mutations become parent copies") {
  auto services = rule_based_services(scripted_agent_factory(), 1);
  services.mutator = std::make_shared<FailingMutator>();
  const auto h = run_task(fifo_task(), default_seed(), config(4, 2, 2), services, std::nullopt);
  REQUIRE_FALSE(h.error.has_value());
  for (const auto& rec : h.generations) {
    REQUIRE(rec.population.size() == 4);
    const auto& parent = rec.population[0].skill;
    for (std::size_t i = 1; i < 4; ++i) {
      const auto& child = rec.population[i];
      CHECK(child.skill.origin == SkillOrigin::kCarriedParent);
      CHECK(child.skill.body == parent.body);
      CHECK(child.skill.parent_id == parent.skill_id);
      CHECK(child.scoring.copied_from == parent.skill_id);
      CHECK(child.score.gated == rec.population[0].score.gated);
    }
  }
}

TEST_CASE("unhealthy children are replaced by copies") {
  const auto dir = fixtures::scratch_dir("evo_health");
  auto services = rule_based_services(scripted_agent_factory(), 1);
  services.mutator = std::make_shared<TruncatingMutator>();
  const auto h = run_task(fifo_task(), default_seed(), config(4, 4, 2), services, dir);
  REQUIRE_FALSE(h.error.has_value());
  RunDirectory run(dir);
  int rejected = 0;
  for (std::size_t g = 1; g < h.generations.size(); ++g) {
    const auto& rec = h.generations[g];
    const auto& survivor = rec.population[0].skill;
    for (const auto& line : run.read_lines(ArtifactFamily::kMutationHealth, static_cast<int>(g))) {
      const auto& child = rec.population.at(line["child_slot"].get<std::size_t>());
      if (line["ok"].get<bool>()) {
        CHECK(child.skill.origin != SkillOrigin::kCarriedParent);
        continue;
      }
      ++rejected;
      CHECK(child.skill.origin == SkillOrigin::kCarriedParent);
      CHECK(child.skill.body == survivor.body);
      CHECK(child.carried);
    }
  }
  CHECK(rejected > 0);
}

TEST_CASE("an oracle failure degrades to statistics and never aborts") {
  auto services = rule_based_services(scripted_agent_factory(), 1);
  services.oracle = std::make_shared<FailingOracle>();
  const auto h = run_task(fifo_task(), default_seed(), config(4, 2, 2), services, std::nullopt);
  CHECK_FALSE(h.error.has_value());
  CHECK(h.generations.size() == 2);
  CHECK(h.generations[0].oracle_summary.keep.empty());
  CHECK(h.generations[0].oracle_summary.add.empty());
}

TEST_CASE("G=1 evaluates the seed and three seed-derived children once") {
  auto services = rule_based_services(scripted_agent_factory(), 1);
  const auto h = run_task(fifo_task(), default_seed(), config(4, 1, 4), services, std::nullopt);
  REQUIRE(h.generations.size() == 1);
  CHECK(h.generations[0].population[0].skill.origin == SkillOrigin::kSeed);
  CHECK(rollout_count(h) == 16);
}

TEST_CASE("EA off runs exactly R rollouts with the seed") {
  auto services = rule_based_services(scripted_agent_factory(), 1);
  const auto h = run_task(fifo_task(), default_seed(), config(4, 5, 4, false, false), services, std::nullopt);
  REQUIRE(h.generations.size() == 1);
  CHECK(rollout_count(h) == 4);
  CHECK(h.generations[0].population.size() == 1);
  CHECK(h.final_survivor->origin == SkillOrigin::kSeed);
}

TEST_CASE("eight task-wise loops give 640 rollouts") {
  std::vector<Task> tasks;
  for (const auto& s : load_scenarios(fixtures::asset("scenarios"))) tasks.push_back(make_task(s));
  REQUIRE(tasks.size() == 8);
  auto services = rule_based_services(scripted_agent_factory(), 1);
  const auto histories = run_experiment(tasks, {default_seed()}, config(4, 5, 4), services, std::nullopt);
  std::size_t total = 0;
  for (const auto& h : histories) {
    CHECK_FALSE(h.error.has_value());
    CHECK(h.generations.size() == 5);
    total += rollout_count(h);
  }
  CHECK(total == 640);

  auto c1 = run_experiment(tasks, {default_seed()}, config(4, 5, 4, false, false), services, std::nullopt);
  total = 0;
  for (const auto& h : c1) total += rollout_count(h);
  CHECK(total == 32);
}

TEST_CASE("a failing task does not stop the others") {
  std::vector<Task> tasks{fifo_task(), fifo_task()};
  tasks[0].task_id = "";
  auto services = rule_based_services(scripted_agent_factory(), 1);
  const auto histories = run_experiment(tasks, {default_seed()}, config(2, 1, 1), services, std::nullopt);
  CHECK(histories[0].error.has_value());
  CHECK_FALSE(histories[1].error.has_value());
}

TEST_CASE("fixed seed reproduces artifacts byte for byte") {
  const auto a = fixtures::scratch_dir("evo_a");
  const auto b = fixtures::scratch_dir("evo_b");
  auto s1 = rule_based_services(scripted_agent_factory(), 1);
  auto s2 = rule_based_services(scripted_agent_factory(), 3);
  const auto h1 = run_task(fifo_task(), default_seed(), config(4, 3, 3), s1, a);
  const auto h2 = run_task(fifo_task(), default_seed(), config(4, 3, 3), s2, b);
  const auto snap_a = snapshot(a);
  CHECK(snap_a.size() > 10);
  CHECK(snap_a == snapshot(b));
  for (std::size_t g = 0; g < h1.generations.size(); ++g) {
    CHECK(h1.generations[g].survivor_id == h2.generations[g].survivor_id);
    CHECK(h1.generations[g].rollouts == h2.generations[g].rollouts);
  }
  const auto status = RunDirectory(a).read_json(ArtifactFamily::kStatus);
  CHECK(status["state"] == "completed");
}

TEST_CASE("a wrongly sized population is a configuration error") {
  auto services = rule_based_services(scripted_agent_factory(), 1);
  const Task task = fifo_task();
  auto ctx = make_loop_context(task, config(4, 1, 1), services, nullptr);
  auto population = initial_population(default_seed(), ctx);
  population.pop_back();
  CHECK_THROWS_AS(run_generation(0, population, ctx), InvalidConfig);
}

TEST_CASE("scoring records round-trip") {
  ScoringRecord s{3, std::string("gen2_ind1"), std::string("gen2_ind1"), {"keep a", "add b"}, false, true};
  CHECK(scoring_from_json(to_json(s)) == s);
}
