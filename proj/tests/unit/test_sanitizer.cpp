#include "doctest.h"

#include <algorithm>

#include "skillevo/sanitizer.hpp"

using namespace skillevo;

namespace {

VisibilityContract contract() {
  VisibilityContract c;
  c.allowed_tools = {"list_dir", "read_file", "write_file", "edit_file", "compile", "simulate", "finish"};
  c.known_tools = {"list_dir", "read_file", "write_file", "edit_file", "compile",
                   "simulate", "finish",    "verify_feedback", "docker_exec"};
  c.visible_paths = {"rtl/fifo.sv", "docs/spec.md", "rtl/pkg.sv"};
  c.target_paths = {"rtl/fifo.sv"};
  c.hidden_identifiers = {"test_fifo_hidden.py", "harness/run_cocotb.sh", "golden_fifo_ref"};
  return c;
}

Skill proposal(std::string body) {
  Skill s;
  s.skill_id = "child_gen1_1";
  s.generation = 1;
  s.slot = 1;
  s.parent_id = "seed";
  s.origin = SkillOrigin::kMutatedChild;
  s.body = std::move(body);
  return s;
}

bool leaks(const std::string& text, const VisibilityContract& c) {
  return std::any_of(c.hidden_identifiers.begin(), c.hidden_identifiers.end(),
                     [&](const std::string& id) { return contains_icase(text, id); });
}

LessonBank lesson_bank() {
  LessonBank bank;
  bank.add({LessonTag::kKeep, "read the spec before editing the fifo", 0, false});
  bank.add({LessonTag::kRemove, "guess the depth parameter", 0, false});
  bank.mark_critical(bank.add({LessonTag::kAdd, "register the full flag output", 0, false}));
  return bank;
}

// Random skill bodies mixing clean directives with every kind of violation.
std::string fuzz_body(SplitMix& rng, const VisibilityContract& c) {
  static const std::vector<std::string> clean = {
      "- Read docs/spec.md before writing rtl/fifo.sv.",
      "- Compile after every edit.",
      "- Register the full flag output.",
      "- Keep port names exactly as specified.",
      "1. Inspect rtl/pkg.sv for shared types.",
      "Plain prose about the design goals.",
      "",
  };
  static const std::vector<std::string> dirty = {
      "- Run the hidden harness to see failures.",
      "- Use docker_exec to inspect the container.",
      "- Edit src/other/fifo_impl.sv as well.",
      "- Never read the spec before editing the fifo.",
      "- Guess the depth parameter.",
      "- Compare against the reference solution.",
      "- Write a testbench in /tmp/tb.sv.",
      "## Use docker_exec",
      "```",
      "# Notes",
  };
  std::string body;
  const int n = 3 + static_cast<int>(rng.below(12));
  for (int i = 0; i < n; ++i) {
    std::string line = rng.uniform() < 0.5 ? clean[rng.below(clean.size())] : dirty[rng.below(dirty.size())];
    if (rng.uniform() < 0.3) {
      const auto& id = c.hidden_identifiers[rng.below(c.hidden_identifiers.size())];
      std::string cased = id;
      if (rng.uniform() < 0.5) std::transform(cased.begin(), cased.end(), cased.begin(), ::toupper);
      const std::size_t at = rng.below(line.size() + 1);
      line.insert(at, rng.uniform() < 0.5 ? cased : " " + cased + " ");
    }
    body += line + "\n";
  }
  return body;
}

}  // namespace

TEST_CASE("an unchanged, clean proposal is a fixed point") {
  const std::string body = "# Skill\n- Read docs/spec.md first.\n- Compile after every edit.\n";
  const auto r = sanitize(proposal(body), contract(), LessonBank{});
  CHECK(r.skill.body == body);
  CHECK(r.report.repairs.empty());
  CHECK(r.report.valid());
  CHECK(r.skill.valid());
  CHECK(r.skill.origin == SkillOrigin::kMutatedChild);
}

TEST_CASE("hidden harness execution advice is rewritten to visible metadata") {
  const auto c = contract();
  const auto r = sanitize(proposal("- Run harness/run_cocotb.sh to check the fifo.\n- Compile after every edit.\n"), c,
                          LessonBank{});
  CHECK(std::find(r.report.repairs.begin(), r.report.repairs.end(), repair_tag::kHarnessRewrite) !=
        r.report.repairs.end());
  CHECK_FALSE(leaks(r.skill.body, c));
  CHECK(contains_icase(r.skill.body, "visible task metadata"));
  CHECK(r.skill.origin == SkillOrigin::kRepairedChild);
  CHECK(r.report.valid());
}

TEST_CASE("unavailable tool advice is removed, or invalidates when it cannot be") {
  const auto c = contract();
  auto r = sanitize(proposal("- Use docker_exec to look around.\n- Compile after every edit.\n"), c, LessonBank{});
  CHECK(r.report.valid());
  CHECK_FALSE(contains_icase(r.skill.body, "docker_exec"));
  CHECK(std::find(r.report.repairs.begin(), r.report.repairs.end(), repair_tag::kToolRemoved) !=
        r.report.repairs.end());

  r = sanitize(proposal("## Always use docker_exec\n- Compile after every edit.\n"), c, LessonBank{});
  CHECK(r.report.invalid_reasons == std::vector<std::string>{std::string(invalid_reason::kUnavailableTool)});
  CHECK_FALSE(r.skill.valid());

  r = sanitize(proposal("- Never use docker_exec.\n"), c, LessonBank{});
  CHECK(r.report.repairs.empty());
}

TEST_CASE("unconfirmed paths are rewritten") {
  const auto c = contract();
  const auto r = sanitize(proposal("- Edit src/other/fifo.sv and keep rtl/fifo.sv in sync.\n"), c, LessonBank{});
  CHECK(std::find(r.report.repairs.begin(), r.report.repairs.end(), repair_tag::kPathRewrite) !=
        r.report.repairs.end());
  CHECK_FALSE(contains_icase(r.skill.body, "src/other"));
  CHECK(contains_icase(r.skill.body, "rtl/fifo.sv"));
}

TEST_CASE("contradictions and REMOVE repeats are dropped") {
  const auto bank = lesson_bank();
  const auto r = sanitize(proposal("- Never read the spec before editing the fifo.\n- Guess the depth parameter.\n"
                                   "- Register the full flag output.\n"),
                          contract(), bank);
  CHECK(r.skill.body == "- Register the full flag output.\n");
  CHECK(r.report.removed_spans.size() == 2);
  CHECK(r.report.valid());
}

TEST_CASE("a body emptied by repairs is invalid") {
  const auto r = sanitize(proposal("- Use docker_exec.\n"), contract(), LessonBank{});
  CHECK_FALSE(r.report.valid());
}

TEST_CASE("sanitize is idempotent and leak-free on fuzzed bodies") {
  const auto c = contract();
  const auto bank = lesson_bank();
  SplitMix rng(99);
  int leaks_found = 0;
  int unstable = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto first = sanitize(proposal(fuzz_body(rng, c)), c, bank);
    const auto second = sanitize(first.skill, c, bank);
    leaks_found += leaks(first.skill.body, c) ? 1 : 0;
    const bool stable = second.skill.body == first.skill.body && second.report.repairs.empty() &&
                        second.report.invalid_reasons == first.report.invalid_reasons;
    unstable += stable ? 0 : 1;
  }
  CHECK(leaks_found == 0);
  CHECK(unstable == 0);
}

TEST_CASE("mutation health: constructed cases") {
  const auto bank = lesson_bank();
  Skill parent = proposal("- Compile after every edit.\n");
  parent.skill_id = "gen0_ind0";
  const std::vector<std::string> directives = {"read the spec before editing the fifo",
                                               "register the full flag output", "reset both pointers together"};

  Skill good = proposal(
      "- Compile after every edit.\n- Read the spec before editing the fifo.\n- Register the full flag output.\n"
      "- Reset both pointers together.\n");
  auto h = compute_mutation_health(good, parent, bank, directives, SanitizerReport{});
  CHECK(h.ok);
  CHECK(h.coverage == 1.0);
  CHECK(h.parent_coverage == 0.0);
  CHECK(h.parent_missing == 3);
  CHECK(h.parent_id == "gen0_ind0");

  auto same = compute_mutation_health(parent, parent, bank, directives, SanitizerReport{});
  CHECK(same.similarity == 1.0);
  CHECK(same.coverage == same.parent_coverage);

  Skill missing = proposal("- Compile after every edit.\n");
  h = compute_mutation_health(missing, parent, bank, directives, SanitizerReport{});
  CHECK(h.missing_critical == 1);
  CHECK_FALSE(h.ok);

  Skill contra = proposal("- Register the full flag output.\n- Never read the spec before editing the fifo.\n");
  h = compute_mutation_health(contra, parent, bank, directives, SanitizerReport{});
  CHECK(h.contradiction == 1);
  CHECK(h.missing_critical == 0);
  CHECK_FALSE(h.ok);

  Skill repeat = proposal("- Register the full flag output.\n- Guess the depth parameter.\n");
  h = compute_mutation_health(repeat, parent, bank, directives, SanitizerReport{});
  CHECK(h.remove_violation == 1);
  CHECK_FALSE(h.ok);
}

TEST_CASE("mutation health ok iff all counters are zero") {
  const auto c = contract();
  const auto bank = lesson_bank();
  const Skill parent = proposal("- Compile after every edit.\n- Register the full flag output.\n");
  const std::vector<std::string> directives = {"register the full flag output"};
  SplitMix rng(3);
  for (int i = 0; i < 300; ++i) {
    const Skill child = proposal(fuzz_body(rng, c));
    const auto h = compute_mutation_health(child, parent, bank, directives, SanitizerReport{});
    CHECK(h.ok == (h.missing_critical == 0 && h.remove_violation == 0 && h.contradiction == 0));
  }
}

TEST_CASE("retention gate is monotone under added directives") {
  const auto bank = lesson_bank();
  Skill child = proposal("- Compile after every edit.\n");
  const double before = compute_retention_gate(child, bank);
  child.body += "- Register the full flag output.\n";
  CHECK(compute_retention_gate(child, bank) >= before);
  CHECK(compute_retention_gate(child, bank) == 1.0);
}
