#include "doctest.h"

#include <fstream>

#include "fixtures.hpp"
#include "skillevo/evolution.hpp"
#include "skillevo/replay.hpp"
#include "skillevo/scripted_agent.hpp"

using namespace skillevo;

namespace {

RunConfig small_config() {
  RunConfig c;
  c.population_size = 3;
  c.generations = 3;
  c.repeats = 2;
  c.seed = 11;
  return c;
}

std::filesystem::path fresh_run(const std::string& name) {
  const auto dir = fixtures::scratch_dir(name);
  auto services = rule_based_services(scripted_agent_factory(), 1);
  const Task task = make_task(load_scenario(fixtures::asset("scenarios/rtl_sync_fifo.json")));
  const Skill seed = make_seed_skill(read_file(fixtures::asset("skills/seed/default.md")));
  const auto h = run_task(task, seed, small_config(), services, dir);
  REQUIRE_FALSE(h.error.has_value());
  return dir;
}

void overwrite(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary | std::ios::trunc) << text;
}

}  // namespace

TEST_CASE("payload schema rejects missing and empty mandatory fields") {
  CHECK_NOTHROW(validate_payload(ArtifactFamily::kStatus, {{"state", "running"}}));
  CHECK_THROWS_AS(validate_payload(ArtifactFamily::kStatus, {{"state", ""}}), SchemaViolation);
  CHECK_THROWS_AS(validate_payload(ArtifactFamily::kStatus, Json::object()), SchemaViolation);
  CHECK_THROWS_AS(validate_payload(ArtifactFamily::kMutationHealth, {{"child_slot", 1}, {"parent_id", nullptr}, {"ok", true}}),
                  SchemaViolation);
  CHECK_THROWS_AS(validate_payload(ArtifactFamily::kMutationHealth, {{"child_slot", "1"}, {"parent_id", "p"}, {"ok", true}}),
                  SchemaViolation);

  RunDirectory run(fixtures::scratch_dir("schema"));
  CHECK_THROWS_AS(run.write(ArtifactFamily::kCombinedSelectionFitness, 0,
                            {{"generation", 0}, {"survivor_id", "gen0_ind0"}, {"candidates", Json::array()}}),
                  SchemaViolation);
  CHECK_FALSE(run.exists(ArtifactFamily::kCombinedSelectionFitness, 0));
}

TEST_CASE("line families only grow; documents keep prior versions") {
  RunDirectory run(fixtures::scratch_dir("append"));
  std::string previous;
  for (int i = 0; i < 5; ++i) {
    run.write(ArtifactFamily::kMutationHealth, 0, {{"child_slot", i}, {"parent_id", "gen0_ind0"}, {"ok", i % 2 == 0}});
    const std::string now = read_file(run.path_for(ArtifactFamily::kMutationHealth, 0));
    CHECK(now.size() > previous.size());
    CHECK(now.compare(0, previous.size(), previous) == 0);
    previous = now;
  }
  CHECK(run.read_lines(ArtifactFamily::kMutationHealth, 0).size() == 5);

  run.write(ArtifactFamily::kStatus, -1, {{"state", "running"}});
  run.write(ArtifactFamily::kStatus, -1, {{"state", "completed"}});
  CHECK(run.read_json(ArtifactFamily::kStatus)["state"] == "completed");
  const auto current = run.path_for(ArtifactFamily::kStatus);
  const auto backup = current.parent_path() / (current.stem().string() + current.extension().string() + ".v1");
  CHECK(std::filesystem::exists(backup));
}

TEST_CASE("missing artifacts name their family") {
  RunDirectory run(fixtures::scratch_dir("missing"));
  try {
    run.read_json(ArtifactFamily::kGenerationMetrics, 2);
    FAIL("expected MissingArtifact");
  } catch (const MissingArtifact& e) {
    CHECK(e.family() == ArtifactFamily::kGenerationMetrics);
    CHECK(std::string(e.what()).find(family_name(ArtifactFamily::kGenerationMetrics)) != std::string::npos);
  }
  CHECK(family_name(ArtifactFamily::kCombinedSelectionFitness) == "combined_selection_fitness");
  CHECK(family_info(ArtifactFamily::kRolloutDiagnostics).format == ArtifactFormat::kLines);
  CHECK(family_info(ArtifactFamily::kGenerationMetrics).mandatory);
}

TEST_CASE("lesson bank render and parse round-trip") {
  LessonBank bank;
  bank.add({LessonTag::kKeep, "read the spec before editing", 0, false});
  bank.add({LessonTag::kRemove, "guess the reset polarity", 1, true});
  bank.mark_critical(bank.add({LessonTag::kAdd, "register the full flag output", 2, false}));
  const std::string text = render_lesson_bank(bank, 2);
  CHECK(text.find("[ADD*]") != std::string::npos);
  const LessonBank back = parse_lesson_bank(text);
  CHECK(render_lesson_bank(back, 2) == text);
  CHECK(back.lessons_with(LessonTag::kRemove).size() == 1);
  CHECK(back.lessons_with(LessonTag::kRemove)[0].from_invalid_candidate);
}

TEST_CASE("replay of an untouched run reproduces every metric") {
  const auto dir = fresh_run("replay_clean");
  const auto result = replay_metrics(dir);
  CHECK(result.generations.size() == 3);
  CHECK(result.diffs.empty());
  CHECK(result.survivors_match());
  CHECK(result.clean());
}

TEST_CASE("replay flags a single tampered SelectQ") {
  const auto dir = fresh_run("replay_tamper");
  RunDirectory run(dir);
  Json fitness = run.read_json(ArtifactFamily::kCombinedSelectionFitness, 1);
  auto& target = fitness["candidates"][1]["SelectQ"];
  target = target.get<double>() + 0.25;
  overwrite(run.path_for(ArtifactFamily::kCombinedSelectionFitness, 1), fitness.dump(2));

  const auto result = replay_metrics(dir);
  REQUIRE(result.diffs.size() == 1);
  CHECK(result.diffs[0].generation == 1);
  CHECK(result.diffs[0].field == "SelectQ");
  CHECK(format_diff(result.diffs[0]).find("SelectQ") != std::string::npos);
}

TEST_CASE("replay refuses a run with a missing metrics file") {
  const auto dir = fresh_run("replay_missing");
  std::filesystem::remove(RunDirectory(dir).path_for(ArtifactFamily::kGenerationMetrics, 1));
  try {
    replay_metrics(dir);
    FAIL("expected MissingArtifact");
  } catch (const MissingArtifact& e) {
    CHECK(e.family() == ArtifactFamily::kGenerationMetrics);
  }
}

TEST_CASE("replay reports drifted records") {
  const auto dir = fresh_run("replay_drift");
  overwrite(RunDirectory(dir).path_for(ArtifactFamily::kRunConfig), "{\"population_size\": \"three\"}");
  CHECK_THROWS_AS(replay_metrics(dir), SchemaDrift);
}
