#include "doctest.h"

#include "fixtures.hpp"
#include "skillevo/manifest.hpp"

using namespace skillevo;

namespace {

std::vector<std::string> violated_fields(const InvalidConfig& e) {
  std::vector<std::string> out;
  for (const auto& v : e.violations()) out.push_back(v.field);
  return out;
}

}  // namespace

TEST_CASE("conditions map one-to-one onto flag pairs") {
  for (auto c : {Condition::kC1, Condition::kC2, Condition::kC3, Condition::kC4}) {
    CHECK(condition_for(condition_flags(c)) == c);
    CHECK(parse_condition(to_string(c)) == c);
  }
  CHECK(condition_flags(Condition::kC1) == ConditionFlags{false, false});
  CHECK(condition_flags(Condition::kC2) == ConditionFlags{false, true});
  CHECK(condition_flags(Condition::kC3) == ConditionFlags{true, false});
  CHECK(condition_flags(Condition::kC4) == ConditionFlags{true, true});
  CHECK_THROWS_AS(parse_condition("C5"), InvalidConfig);
  CHECK_THROWS_AS(parse_condition("c1"), InvalidConfig);
}

TEST_CASE("shipped configs agree with their conditions") {
  const char* names[] = {"c1", "c2", "c3", "c4"};
  const Condition conds[] = {Condition::kC1, Condition::kC2, Condition::kC3, Condition::kC4};
  for (int i = 0; i < 4; ++i) {
    const auto config = load_run_config(fixtures::asset(std::string("configs/") + names[i] + ".yml"));
    CHECK_NOTHROW(check_condition(config, conds[i]));
    CHECK(config.population_size == 4);
    CHECK(config.generations == 5);
    CHECK(config.repeats == 4);
    CHECK(config.turn_cap == 30);
    CHECK(config.feedback_budget == 3);
  }
}

TEST_CASE("YAML keys accept the short aliases and reject unknown ones") {
  const auto config = parse_run_config_yaml("K: 2\nG: 3\nR: 5\nN_task: 2\ntau: 0.1\n");
  CHECK(config.population_size == 2);
  CHECK(config.generations == 3);
  CHECK(config.repeats == 5);
  CHECK(config.task_count == 2);
  CHECK(config.semantic_floor_tau == 0.1);

  CHECK(parse_run_config_yaml("").population_size == RunConfig{}.population_size);
  CHECK_THROWS_AS(parse_run_config_yaml("population: 4\n"), InvalidConfig);
  CHECK_THROWS_AS(parse_run_config_yaml("K: four\n"), InvalidConfig);
  CHECK_THROWS_AS(parse_run_config_yaml("K: [4]\n"), InvalidConfig);
  CHECK_THROWS_AS(parse_run_config_yaml("- 1\n- 2\n"), InvalidConfig);
  CHECK_THROWS_AS(parse_run_config_yaml("K: 0\n"), InvalidConfig);
  CHECK_THROWS_AS(parse_run_config_yaml("ea_enabled: maybe\n"), InvalidConfig);
}

TEST_CASE("overrides are validated and may conflict with the condition") {
  auto config = load_run_config(fixtures::asset("configs/c4.yml"));
  apply_override(config, "R=2");
  CHECK(config.repeats == 2);
  apply_override(config, "seed = 7");
  CHECK(config.seed == 7u);
  CHECK_THROWS_AS(apply_override(config, "repeats"), InvalidConfig);
  CHECK_THROWS_AS(apply_override(config, "turn_cap=0"), InvalidConfig);

  apply_override(config, "ea_enabled=false");
  try {
    check_condition(config, Condition::kC4);
    FAIL("expected InvalidConfig");
  } catch (const InvalidConfig& e) {
    CHECK(violated_fields(e) == std::vector<std::string>{"ea_enabled"});
  }
}

TEST_CASE("manifest paths resolve against the manifest directory") {
  const auto m = load_manifest(fixtures::asset("manifests/c1.json"));
  CHECK(m.output_root == fixtures::asset("runs/c1").lexically_normal());
  CHECK(m.seed_skill == fixtures::asset("skills/seed/default.md").lexically_normal());
  REQUIRE(m.runs.size() == 1);
  CHECK(m.runs[0].condition == Condition::kC1);
  CHECK(m.runs[0].task == fixtures::asset("scenarios").lexically_normal());
  CHECK_FALSE(m.endpoint.has_value());

  const Json doc = {{"output_root", "/abs/out"},
                    {"seed_skill", "seed.md"},
                    {"endpoint", {{"base_url", "http://localhost:9"}, {"model", "m"}, {"temperature", 0.5}}},
                    {"runs", {{{"task", "t.json"}, {"config", "c.yml"}, {"condition", "C3"}, {"seed_skill", "s.md"}}}}};
  const auto parsed = parse_manifest(doc, "/base/dir");
  CHECK(parsed.output_root == "/abs/out");
  CHECK(parsed.seed_skill == "/base/dir/seed.md");
  REQUIRE(parsed.endpoint.has_value());
  CHECK(parsed.endpoint->temperature == 0.5);
  CHECK(parsed.runs[0].seed_skill == std::filesystem::path("/base/dir/s.md"));

  Json bad = doc;
  bad["runs"] = Json::array();
  CHECK_THROWS_AS(parse_manifest(bad, "/base"), InvalidConfig);
  bad = doc;
  bad["endpoint"]["retries"] = 3;
  CHECK_THROWS_AS(parse_manifest(bad, "/base"), InvalidConfig);
  bad = doc;
  bad["runs"][0].erase("config");
  CHECK_THROWS_AS(parse_manifest(bad, "/base"), InvalidConfig);
  CHECK_THROWS_AS(load_manifest(fixtures::asset("manifests/absent.json")), InvalidConfig);
}
