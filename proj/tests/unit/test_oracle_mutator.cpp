#include "doctest.h"

#include "skillevo/mutator.hpp"
#include "skillevo/oracle.hpp"

using namespace skillevo;

namespace {

ToolEvent edit(int turn, std::string note) {
  ToolEvent e;
  e.turn = turn;
  e.tool_name = "write_file";
  e.kind = ToolKind::kEdit;
  e.files_written = {"rtl/fifo.sv"};
  e.note = std::move(note);
  return e;
}

ToolEvent simulate(int turn, int failed) {
  ToolEvent e;
  e.turn = turn;
  e.tool_name = "simulate";
  e.kind = ToolKind::kSimulate;
  e.details = {{"tests_failed", failed}};
  return e;
}

ToolEvent feedback(int turn, int failed) {
  ToolEvent e;
  e.turn = turn;
  e.tool_name = "verify_feedback";
  e.kind = ToolKind::kFeedback;
  e.details = {{"observation", {{"tests_failed", failed}}}};
  return e;
}

VisibilityContract contract() {
  VisibilityContract c;
  c.allowed_tools = {"read_file", "write_file", "compile", "simulate", "verify_feedback", "finish"};
  c.target_paths = {"rtl/fifo.sv"};
  c.shadow_paths = {"verif/fifo.sv"};
  return c;
}

}  // namespace

TEST_CASE("rollup line format") {
  const std::vector<double> rates{0.75, 0.5, 0.25, 0.0};
  CHECK(rollup_line("cid003", "rtl_x", rates) == "[cid003] rtl_x avg=38% (75%, 50%, 25%, 0%) [SOMETIMES SOLVED]");
  const std::vector<double> zeros{0.0, 0.0};
  CHECK(rollup_line("cid001", "t", zeros).ends_with("[NEVER SOLVED]"));
  const std::vector<double> ones{1.0};
  CHECK(rollup_line("cid001", "t", ones).ends_with("[ALWAYS SOLVED]"));
}

TEST_CASE("productive edits are those followed by fewer failures") {
  RolloutRecord r;
  r.events = {simulate(1, 4), edit(2, "Reset both pointers together"), simulate(3, 2),
              edit(4, "Rename a signal"), simulate(5, 2), edit(6, "Register the full flag output"),
              feedback(7, 3), feedback(8, 1)};
  // The last edit has no hidden count before it and no simulation after it.
  r.final_outcome.tests_failed = 0;
  const auto notes = productive_edit_notes(r);
  REQUIRE(notes.size() == 1);
  CHECK(notes[0] == "Reset both pointers together");

  RolloutRecord hidden;
  hidden.events = {feedback(1, 3), edit(2, "Drive the mask output"), feedback(3, 1)};
  CHECK(productive_edit_notes(hidden) == std::vector<std::string>{"Drive the mask output"});
}

TEST_CASE("rule-based oracle sorts lessons into KEEP and ADD") {
  Skill survivor;
  survivor.skill_id = "gen0_ind0";
  survivor.body = "- Reset both pointers together.\n";
  Skill other = survivor;
  other.skill_id = "gen0_ind1";

  RolloutRecord pass;
  pass.events = {simulate(1, 3), edit(2, "Reset both pointers together"), simulate(3, 1),
                 edit(4, "Register the full flag output"), simulate(5, 0)};
  pass.final_outcome.passed = true;
  pass.phase_reached = Phase::kTested;
  RolloutRecord shadow;
  shadow.events = {edit(1, ""), simulate(2, 3)};
  shadow.events[0].files_written = {"verif/fifo.sv"};
  shadow.phase_reached = Phase::kTested;

  CandidateEvaluation e0{"gen0_ind0", 0, 1.0};
  e0.select_q = 1.2;
  CandidateEvaluation e1{"gen0_ind1", 1, 0.0};
  e1.select_q = 0.1;
  const std::vector<RolloutRecord> r0{pass};
  const std::vector<RolloutRecord> r1{shadow};
  const auto c = contract();
  const LessonBank bank;
  Task task;
  task.task_id = "rtl_fifo";
  task.category_id = "cid004";

  OracleInput in;
  in.generation = 0;
  in.task = &task;
  in.candidates = {{&survivor, &e0, r0}, {&other, &e1, r1}};
  in.survivor = &survivor;
  in.bank = &bank;
  in.contract = &c;
  const auto s = RuleBasedOracle().summarize(in);
  CHECK(s.best == 1.2);
  CHECK(s.worst == 0.1);
  CHECK(s.mean == doctest::Approx(0.65));
  CHECK(s.rollup == "[cid004] rtl_fifo avg=50% (100%, 0%) [SOMETIMES SOLVED]");
  CHECK(s.keep == std::vector<std::string>{"Reset both pointers together"});
  REQUIRE(s.add.size() >= 2);
  CHECK(s.add[0] == "Register the full flag output");
  CHECK(s.critical.size() == 2);
  REQUIRE(s.remove.size() == 1);
  CHECK(s.remove[0].find("verif/fifo.sv") != std::string::npos);

  in.survivor = nullptr;
  CHECK_THROWS_AS(RuleBasedOracle().summarize(in), OracleFailure);
}

TEST_CASE("free-text lesson lines parse into lists") {
  OracleSummary s;
  parse_lesson_lines("Some preamble\n- KEEP: read the spec\n* ADD: compile often\nREMOVE: guess widths\n"
                     "CRITICAL: reset pointers\nKEEP:\nADD: compile often\n",
                     s);
  CHECK(s.keep == std::vector<std::string>{"read the spec"});
  CHECK(s.add == std::vector<std::string>{"compile often", "reset pointers"});
  CHECK(s.remove == std::vector<std::string>{"guess widths"});
  CHECK(s.critical == std::vector<std::string>{"reset pointers"});
  const std::string rendered = render_oracle_feedback(s);
  CHECK(rendered.find("## CRITICAL\n- reset pointers") != std::string::npos);
}

TEST_CASE("lesson integration appends only what is missing") {
  MutationHandoff h;
  h.keep = {"Read the spec before editing the fifo"};
  h.add = {"Register the full flag output"};
  const std::string body = "# Skill\n- Read the spec before editing the fifo.\n";
  const std::string out = integrate_lessons(body, h);
  CHECK(out == "# Skill\n- Read the spec before editing the fifo.\n\n## Lessons\n- Register the full flag output\n");
  CHECK(integrate_lessons(out, h) == out);

  MutationHandoff more;
  more.add = {"Reset both pointers together"};
  const std::string extended = integrate_lessons(out + "\n## Notes\nprose\n", more);
  CHECK(extended.find("- Register the full flag output\n- Reset both pointers together\n\n## Notes") != std::string::npos);
}

TEST_CASE("pruning drops same-polarity repeats of REMOVE lessons") {
  const std::string body = "- Guess the depth parameter.\n- Never guess the depth parameter.\n- Compile often.\n";
  CHECK(prune_remove_lessons(body, {"guess the depth parameter"}) ==
        "- Never guess the depth parameter.\n- Compile often.\n");
}

TEST_CASE("rule-based mutator strategies by slot") {
  Skill survivor;
  survivor.skill_id = "gen0_ind0";
  survivor.body = "- One directive here.\n- Two directive here.\n- Three directive here.\n- Four directive here.\n";
  MutationHandoff h;
  h.add = {"Register the full flag output"};
  RuleBasedMutator m;

  const std::string s1 = m.propose({1, 1, &survivor, &h, nullptr, nullptr});
  CHECK(s1.find("## Lessons\n- Register the full flag output") != std::string::npos);

  const std::string s2 = m.propose({1, 2, &survivor, &h, nullptr, nullptr});
  CHECK(s2.size() > s1.size());
  CHECK(s2.find("## Lessons\n- Register the full flag output") != std::string::npos);

  const std::string s3 = m.propose({1, 3, &survivor, &h, nullptr, nullptr});
  CHECK(s3.find("Four directive") == std::string::npos);
  CHECK(s3.find("One directive") != std::string::npos);

  CHECK_THROWS_AS(m.propose({1, 1, nullptr, &h, nullptr, nullptr}), MutatorFailure);
  CHECK(render_mutation_handoff(h).find("NOT EFFECTIVE") != std::string::npos);
}
