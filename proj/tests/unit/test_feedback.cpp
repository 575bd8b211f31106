#include "doctest.h"

#include <algorithm>
#include <variant>

#include "fixtures.hpp"
#include "skillevo/feedback.hpp"
#include "skillevo/text.hpp"

using namespace skillevo;

namespace {

FeedbackSession ready_session() {
  FeedbackSession s;
  s.enabled = true;
  s.budget = 3;
  s.record_edit();
  s.record_compile(true);
  return s;
}

bool refused_with(const FeedbackResult& r, FeedbackRefusal code) {
  return std::holds_alternative<FeedbackRefusal>(r) && std::get<FeedbackRefusal>(r) == code;
}

bool any_leak(const FeedbackObservation& obs, const VisibilityContract& c) {
  for (const auto& s : observation_strings(obs)) {
    for (const auto& id : c.hidden_identifiers) {
      if (contains_icase(s, id)) return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("budget of three: the fourth call is refused") {
  auto env = fixtures::five_test_env();
  Workspace ws = env->initial_workspace();
  auto session = ready_session();
  for (int i = 0; i < 3; ++i) {
    ws.write("rtl/alu.sv", "module alu;\n  // revision " + std::to_string(i) + "\nendmodule\n");
    const auto r = request_feedback(session, "check", *env, ws);
    REQUIRE(std::holds_alternative<FeedbackObservation>(r));
  }
  CHECK(session.calls_used == 3);
  ws.write("rtl/alu.sv", "module alu;\n  // revision 4\nendmodule\n");
  CHECK(refused_with(request_feedback(session, "again", *env, ws), FeedbackRefusal::kBudgetExhausted));
  CHECK(session.calls_used == 3);
}

TEST_CASE("precondition refusals do not consume budget") {
  auto env = fixtures::five_test_env();
  Workspace ws = env->initial_workspace();

  FeedbackSession off;
  CHECK(refused_with(request_feedback(off, "", *env, ws), FeedbackRefusal::kFeatureDisabled));

  FeedbackSession s;
  s.enabled = true;
  CHECK(refused_with(request_feedback(s, "", *env, ws), FeedbackRefusal::kNoEditYet));
  s.record_edit();
  CHECK(refused_with(request_feedback(s, "", *env, ws), FeedbackRefusal::kNoSuccessfulCompile));
  s.record_compile(false);
  CHECK(refused_with(request_feedback(s, "", *env, ws), FeedbackRefusal::kNoSuccessfulCompile));
  s.record_compile(true);
  ws.write("rtl/alu.sv", "module alu;\nendmodule\n");
  REQUIRE(std::holds_alternative<FeedbackObservation>(request_feedback(s, "", *env, ws)));
  CHECK(refused_with(request_feedback(s, "", *env, ws), FeedbackRefusal::kNoChangeSinceLastCall));
  CHECK(s.calls_used == 1);
  CHECK(refusal_message(FeedbackRefusal::kBudgetExhausted).find("budget") != std::string::npos);
}

TEST_CASE("feedback never mutates the live workspace") {
  auto env = fixtures::five_test_env();
  Workspace ws = env->initial_workspace();
  ws.write("rtl/alu.sv", "module alu;\n  assign y = a + b;\nendmodule\n");
  const auto before = ws.digest();
  auto session = ready_session();
  request_feedback(session, "", *env, ws);
  CHECK(ws.digest() == before);
}

TEST_CASE("failing 3 of 5 hidden tests maps to a simulation failure at P4") {
  auto env = fixtures::five_test_env();
  Workspace ws = env->initial_workspace();
  ws.write("rtl/alu.sv", "module alu;\n  assign y = a + b;\nendmodule\n");
  auto session = ready_session();
  const auto r = request_feedback(session, "", *env, ws);
  REQUIRE(std::holds_alternative<FeedbackObservation>(r));
  const auto& obs = std::get<FeedbackObservation>(r);
  CHECK(obs.mode == FeedbackMode::kFailSimulation);
  CHECK(to_string(obs.mode) == "fail:simulation_or_assertion");
  CHECK(obs.phase == Phase::kTested);
  CHECK(obs.tests_total == 5);
  CHECK(obs.tests_failed == 3);
  CHECK_FALSE(any_leak(obs, env->contract()));
  CHECK(std::find(obs.summary_lines.begin(), obs.summary_lines.end(), "ERROR: Failed 3 of 5 tests") !=
        obs.summary_lines.end());
}

TEST_CASE("sanitize_verifier_output examples") {
  VisibilityContract c;
  c.hidden_identifiers = {"tb_hidden_fifo.py"};

  RawVerifierBundle pass{0, "running\nTESTS=5 PASS=5 FAIL=0\n", false};
  auto obs = sanitize_verifier_output(pass, c);
  CHECK(obs.mode == FeedbackMode::kPass);
  CHECK(obs.tests_total == 5);
  CHECK(obs.tests_failed == 0);

  RawVerifierBundle leaky{1, "tb_hidden_fifo.py::test_full FAILED\nValueError: tb_hidden_fifo.py mismatch\n"
                             "TESTS=4 PASS=3 FAIL=1\n", false};
  obs = sanitize_verifier_output(leaky, c);
  CHECK(obs.mode == FeedbackMode::kFailSimulation);
  CHECK_FALSE(any_leak(obs, c));

  for (const char* garbled : {"", "\x01\x02 noise", "TESTS=banana"}) {
    obs = sanitize_verifier_output(RawVerifierBundle{3, garbled, false}, c);
    CHECK(obs.mode == FeedbackMode::kFailInfra);
    CHECK_FALSE(obs.tests_total.has_value());
    CHECK_FALSE(obs.tests_failed.has_value());
  }

  obs = sanitize_verifier_output(RawVerifierBundle{2, "COMPILE ERROR: missing endmodule\n", false}, c);
  CHECK(obs.mode == FeedbackMode::kFailCompile);
  obs = sanitize_verifier_output(RawVerifierBundle{124, "", true}, c);
  CHECK(obs.mode == FeedbackMode::kFailTimeout);
}

TEST_CASE("observations are leak-free on fuzzed bundles") {
  VisibilityContract c;
  c.hidden_identifiers = {"hidden_alu_harness", "alu_golden_ref", "/opt/harness/run.sh"};
  const std::vector<std::string> pieces = {"TESTS=5 PASS=2 FAIL=3", "ERROR: Failed 3 of 5 tests",
                                           "AssertionError: value mismatch", "collecting tests",
                                           "Dockerfile: FROM runner", "RESULT=1", "RuntimeError: bad state"};
  SplitMix rng(17);
  int leaks = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string log;
    const int n = 1 + static_cast<int>(rng.below(10));
    for (int k = 0; k < n; ++k) {
      std::string line = pieces[rng.below(pieces.size())];
      if (rng.uniform() < 0.5) {
        std::string id = c.hidden_identifiers[rng.below(c.hidden_identifiers.size())];
        if (rng.uniform() < 0.5) std::transform(id.begin(), id.end(), id.begin(), ::toupper);
        line.insert(rng.below(line.size() + 1), id);
      }
      log += line + "\n";
    }
    const auto obs = sanitize_verifier_output(RawVerifierBundle{static_cast<int>(rng.below(3)), log, false}, c);
    leaks += any_leak(obs, c) ? 1 : 0;
    CHECK((obs.mode != FeedbackMode::kPass || !obs.tests_failed || *obs.tests_failed == 0));
  }
  CHECK(leaks == 0);
}

TEST_CASE("observation JSON round-trip") {
  FeedbackObservation obs;
  obs.mode = FeedbackMode::kFailSimulation;
  obs.phase = Phase::kTested;
  obs.tests_total = 5;
  obs.tests_failed = 3;
  obs.next_focus_hint = "re-check";
  obs.exit_code = 1;
  obs.summary_lines = {"TESTS=5 PASS=2 FAIL=3"};
  CHECK(observation_from_json(to_json(obs)) == obs);
}
