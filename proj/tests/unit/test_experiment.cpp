#include "doctest.h"

#include <sstream>

#include "fixtures.hpp"
#include "skillevo/experiment.hpp"

using namespace skillevo;

namespace {

RunOptions options_for(const std::string& name) {
  RunOptions o;
  o.output_root = fixtures::scratch_dir(name);
  o.replay = true;
  return o;
}

}  // namespace

TEST_CASE("task loading accepts a file or a directory") {
  CHECK(load_tasks(fixtures::asset("scenarios")).size() == 8);
  const auto one = load_tasks(fixtures::asset("scenarios/designed/designed_lesson_unlock.json"));
  REQUIRE(one.size() == 1);
  CHECK_NOTHROW(validate_task(one[0]));
}

TEST_CASE("the C1 manifest runs one seed rollout batch per task") {
  const auto manifest = load_manifest(fixtures::asset("manifests/c1.json"));
  auto options = options_for("exp_c1");
  std::ostringstream log;
  const auto rows = run_manifest(manifest, options, simulator_services(), log);
  REQUIRE(rows.size() == 1);
  const auto& c1 = rows[0];
  CHECK(c1.label == "C1");
  CHECK_FALSE(c1.ea_enabled);
  CHECK(c1.tasks == 8);
  CHECK(c1.rollouts == 32);
  CHECK(c1.failures() == 0);
  CHECK(c1.pass_rate == doctest::Approx(static_cast<double>(c1.passes) / 32));
  for (const auto& t : c1.task_outcomes) {
    CHECK(t.rollouts == 4);
    CHECK(t.replay_diffs == 0);
    CHECK(t.replay_survivors_match);
    CHECK(std::filesystem::exists(t.run_dir / "run_config.json"));
  }
  CHECK(log.str().find("[C1] rtl_sync_fifo") != std::string::npos);
}

TEST_CASE("condition filter, overrides and conflicts") {
  const auto manifest = load_manifest(fixtures::asset("manifests/designed.json"));
  auto options = options_for("exp_filter");
  options.condition = Condition::kC4;
  options.overrides = {"G=2", "R=2"};
  std::ostringstream log;
  const auto rows = run_manifest(manifest, options, simulator_services(), log);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].label == "C4");
  CHECK(rows[0].rollouts == 4 * 2 * 2);

  auto conflict = options_for("exp_conflict");
  conflict.overrides = {"ea_enabled=false"};
  conflict.condition = Condition::kC4;
  CHECK_THROWS_AS(run_manifest(manifest, conflict, simulator_services(), log), InvalidConfig);
  CHECK(std::filesystem::is_empty(*conflict.output_root));

  auto missing = options_for("exp_missing");
  missing.condition = Condition::kC2;
  CHECK_THROWS_AS(run_manifest(manifest, missing, simulator_services(), log), InvalidConfig);
}

TEST_CASE("summaries aggregate task outcomes") {
  RunConfig config;
  config.ea_enabled = true;
  config.dense_feedback_enabled = false;
  std::vector<TaskOutcome> outcomes(2);
  outcomes[0] = {"a", {}, 4, 3, {0.5, 0.7}};
  outcomes[1] = {"b", {}, 4, 0, {0.3}};
  outcomes[1].error = "boom";
  const auto s = summarize_condition(Condition::kC3, config, outcomes);
  CHECK(s.rollouts == 8);
  CHECK(s.passes == 3);
  CHECK(s.solved == 1);
  CHECK(s.tasks == 2);
  CHECK(s.pass_rate == 0.375);
  CHECK(s.agent_q == doctest::Approx(0.5));
  CHECK(s.failures() == 1);

  const std::string table = format_summary_table({s});
  CHECK(table.starts_with("Cfg"));
  CHECK(table.find("C3    Yes  No             8      37.5%       1/2   0.500") != std::string::npos);
}
