#include "doctest.h"

#include <cmath>
#include <vector>

#include "skillevo/metrics.hpp"

using namespace skillevo;

namespace {

VerifierOutcome outcome(bool passed) {
  VerifierOutcome o;
  o.passed = passed;
  return o;
}

SkillComponents skill_components(double v) { return {v, v, v, v, v, v, v, 1.0}; }
ProgressComponents progress_components(double v) { return {v, v, v, v, v, v}; }

ToolEvent ev(ToolKind kind, std::vector<std::string> files = {}, bool ok = true) {
  ToolEvent e;
  e.kind = kind;
  e.files_written = std::move(files);
  e.succeeded = ok;
  return e;
}

// Pairwise AUC with half credit for ties.
double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[i] != 1 || y[j] != 0) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

// Pearson correlation between the scores and the 0/1 labels.
double pearson(const std::vector<double>& s, const std::vector<int>& y) {
  const double n = static_cast<double>(s.size());
  double ms = 0.0, my = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    ms += s[i];
    my += y[i];
  }
  ms /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    sxy += (s[i] - ms) * (y[i] - my);
    sxx += (s[i] - ms) * (s[i] - ms);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST_CASE("pass rate") {
  std::vector<VerifierOutcome> fails(4, outcome(false));
  CHECK(compute_pass_rate(fails) == 0.0);
  std::vector<VerifierOutcome> passes(4, outcome(true));
  CHECK(compute_pass_rate(passes) == 1.0);

  std::vector<VerifierOutcome> mixed;
  for (int i = 0; i < 80; ++i) mixed.push_back(outcome(i < 35));
  CHECK(compute_pass_rate(mixed) == doctest::Approx(0.4375).epsilon(1e-15));

  std::vector<VerifierOutcome> none;
  CHECK_THROWS_AS(compute_pass_rate(none), MetricError);
}

TEST_CASE("SkillQ weights and gate") {
  auto ones = compute_skill_q(skill_components(1.0));
  CHECK(ones.raw == 1.0);
  CHECK(ones.gated == 1.0);

  auto annihilated = skill_components(0.9);
  annihilated.retention_gate = 0.0;
  CHECK(compute_skill_q(annihilated).gated == 0.0);

  SkillComponents c{0.8, 0.5, 1.0, 0.6, 1.0, 1.0, 1.0, 1.0};
  // .35*.8 + .30*.5 + .10 + .15*.6 + .05 + .03 + .02
  const double expected = 0.28 + 0.15 + 0.10 + 0.09 + 0.05 + 0.03 + 0.02;
  auto s = compute_skill_q(c);
  CHECK(s.raw == doctest::Approx(expected).epsilon(1e-12));
  CHECK(s.raw == doctest::Approx(0.72).epsilon(1e-12));
  CHECK(s.gated == doctest::Approx(0.72).epsilon(1e-12));

  // V_s enters both the sum and the multiplier.
  c.safety_validity = 0.0;
  s = compute_skill_q(c);
  CHECK(s.raw == doctest::Approx(0.67).epsilon(1e-12));
  CHECK(s.gated == doctest::Approx(0.67 * 0.55).epsilon(1e-12));

  c.grounding = 1.2;
  CHECK_THROWS_AS(compute_skill_q(c), MetricError);
}

TEST_CASE("progress weights and path penalty") {
  CHECK(compute_progress(progress_components(1.0)) == 1.0);
  auto no_path = progress_components(1.0);
  no_path.path_grounding = 0.0;
  CHECK(compute_progress(no_path) == doctest::Approx(0.55).epsilon(1e-15));

  ProgressComponents c{0.5, 1.0, 0.8, 0.6, 0.9, 1.0};
  // .40*.5 + .20*1 + .15*.8 + .15*.6 + .10*.9
  const double base = 0.20 + 0.20 + 0.12 + 0.09 + 0.09;
  CHECK(compute_progress_base(c) == doctest::Approx(base).epsilon(1e-12));
  CHECK(compute_progress(c) == doctest::Approx(0.70).epsilon(1e-12));

  c.efficiency = -0.1;
  CHECK_THROWS_AS(compute_progress(c), MetricError);
}

TEST_CASE("progress aggregation") {
  std::vector<double> flat(4, 0.7);
  auto a = aggregate_progress(flat, 4);
  CHECK(a.stddev == 0.0);
  CHECK(a.lcb == a.mean);
  CHECK(a.agent_progress_q == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(a.agent_variance_q == 1.0);

  CHECK(std::abs(agent_progress_q(0.432600, 0.678400) - 0.481760) < 1e-12);

  std::vector<double> split{1.0, 0.0};
  a = aggregate_progress(split, 2);
  CHECK(a.mean == 0.5);
  CHECK(a.stddev == 0.5);
  CHECK(0.5 - 1.96 * 0.5 / std::sqrt(2.0) < 0.0);
  CHECK(a.lcb == 0.0);
  CHECK(a.agent_progress_q == doctest::Approx(0.1).epsilon(1e-12));

  std::vector<double> three{0.2, 0.4, 0.9};
  a = aggregate_progress(three, 3);
  const double mean = 0.5;
  const double sigma = std::sqrt(((0.09) + (0.01) + (0.16)) / 3.0);
  CHECK(a.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(a.stddev == doctest::Approx(sigma).epsilon(1e-12));
  CHECK(a.lcb == doctest::Approx(std::max(0.0, mean - 1.96 * sigma / std::sqrt(3.0))).epsilon(1e-12));

  CHECK_THROWS_AS(aggregate_progress(three, 4), MetricError);
  std::vector<double> empty;
  CHECK_THROWS_AS(aggregate_progress(empty, 1), MetricError);
}

TEST_CASE("variance quality") {
  CHECK(compute_variance_q(0.0) == 1.0);
  CHECK(compute_variance_q(0.30) == 0.0);
  CHECK(compute_variance_q(0.9) == 0.0);
  CHECK(compute_variance_q(0.15) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK_THROWS_AS(compute_variance_q(-0.01), MetricError);
}

TEST_CASE("formulas are monotone in every component") {
  SplitMix rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    double sv[8];
    for (double& x : sv) x = rng.uniform();
    SkillComponents base{sv[0], sv[1], sv[2], sv[3], sv[4], sv[5], sv[6], sv[7]};
    const auto q0 = compute_skill_q(base);
    double* fields[] = {&base.lesson_coverage, &base.grounding,      &base.parent_retention,
                        &base.actionability,   &base.safety_validity, &base.non_redundancy,
                        &base.mutation_conservatism, &base.retention_gate};
    for (double* f : fields) {
      const double old = *f;
      *f = old + (1.0 - old) * rng.uniform();
      const auto q1 = compute_skill_q(base);
      CHECK(q1.raw >= q0.raw - 1e-15);
      CHECK(q1.gated >= q0.gated - 1e-15);
      *f = old;
    }

    ProgressComponents p{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    const double f0 = compute_progress(p);
    double* pf[] = {&p.verifier_progress, &p.execution_phase, &p.harness_alignment,
                    &p.edit_quality,      &p.efficiency,      &p.path_grounding};
    for (double* f : pf) {
      const double old = *f;
      *f = old + (1.0 - old) * rng.uniform();
      CHECK(compute_progress(p) >= f0 - 1e-15);
      *f = old;
    }
  }
}

TEST_CASE("LCB bounds hold on random samples") {
  SplitMix rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const int r = 1 + static_cast<int>(rng.below(8));
    std::vector<double> s;
    for (int i = 0; i < r; ++i) s.push_back(rng.uniform());
    const auto a = aggregate_progress(s, r);
    CHECK(a.lcb <= a.mean);
    CHECK(a.agent_progress_q >= a.lcb - 1e-15);
    CHECK(a.agent_progress_q <= a.mean + 1e-15);
    if (a.stddev > 0.0) CHECK(a.lcb < a.mean);
  }
}

TEST_CASE("trace rubric on a passing 28-turn rollout") {
  RolloutRecord r;
  r.turns_used = 28;
  r.phase_reached = Phase::kTested;
  r.final_outcome.passed = true;
  r.final_outcome.phase = Phase::kTested;
  r.events = {ev(ToolKind::kInspect), ev(ToolKind::kEdit, {"rtl/top.sv"}), ev(ToolKind::kCompile),
              ev(ToolKind::kSimulate)};
  EstimationContext ctx{30, {"rtl/top.sv"}, {"verif/top.sv"}};
  const auto c = estimate_progress_components(r, ctx);
  CHECK(c.verifier_progress == 1.0);
  CHECK(c.execution_phase == 1.0);
  CHECK(c.harness_alignment == 1.0);
  CHECK(c.edit_quality == 1.0);
  CHECK(c.efficiency == doctest::Approx(1.0 - 28.0 / 30.0).epsilon(1e-12));
  CHECK(c.efficiency == doctest::Approx(0.0667).epsilon(1e-3));
  CHECK(c.path_grounding == 1.0);
  CHECK(estimate_progress_components(r, ctx) == c);
}

TEST_CASE("trace rubric edge cases") {
  RolloutRecord empty;
  EstimationContext ctx{30, {"rtl/top.sv"}, {}};
  CHECK(estimate_progress_components(empty, ctx) == ProgressComponents{});

  RolloutRecord partial;
  partial.turns_used = 10;
  partial.phase_reached = Phase::kTested;
  partial.final_outcome.tests_total = 5;
  partial.final_outcome.tests_failed = 3;
  partial.events = {ev(ToolKind::kEdit, {"rtl/top.sv"}), ev(ToolKind::kCompile), ev(ToolKind::kSimulate)};
  auto c = estimate_progress_components(partial, ctx);
  CHECK(c.verifier_progress == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(c.execution_phase == 1.0);
  // Edit before any inspection loses the ordering credit.
  CHECK(c.harness_alignment == doctest::Approx(0.75).epsilon(1e-12));

  RolloutRecord shadowed = partial;
  shadowed.events = {ev(ToolKind::kInspect), ev(ToolKind::kEdit, {"verif/top.sv"}), ev(ToolKind::kCompile, {}, false),
                     ev(ToolKind::kEdit, {"rtl/top.sv"}), ev(ToolKind::kCompile)};
  shadowed.phase_reached = Phase::kCompiled;
  shadowed.final_outcome = {};
  EstimationContext sctx{30, {"rtl/top.sv"}, {"verif/top.sv"}};
  c = estimate_progress_components(shadowed, sctx);
  CHECK(c.verifier_progress == doctest::Approx(3.0 / 8.0).epsilon(1e-12));
  CHECK(c.edit_quality == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(c.path_grounding == doctest::Approx(1.0 - 1.0 / 4.0).epsilon(1e-12));

  RolloutRecord inconsistent;
  inconsistent.turns_used = 0;
  inconsistent.events = {ev(ToolKind::kInspect)};
  CHECK_THROWS_AS(estimate_progress_components(inconsistent, ctx), MetricError);
}

TEST_CASE("retention gate counts critical lessons") {
  LessonBank bank;
  CHECK(compute_retention_gate("anything", bank) == 1.0);
  const char* lessons[] = {"reset the write pointer on clear", "register the full flag output",
                           "compare gray coded pointers across domains", "hold the grant until the request drops"};
  for (const char* l : lessons) bank.mark_critical(bank.add({LessonTag::kAdd, l, 1, false}));
  const std::string three = std::string("- ") + lessons[0] + "\n- " + lessons[1] + "\n- " + lessons[2] + "\n";
  CHECK(compute_retention_gate(three, bank) == 0.75);
  CHECK(compute_retention_gate("- inspect the sources first\n", bank) == 0.0);
  CHECK(compute_retention_gate(three + "- " + lessons[3] + "\n", bank) == 1.0);
}

TEST_CASE("calibration examples") {
  std::vector<double> s{0.9, 0.8, 0.1, 0.2};
  std::vector<int> y{1, 1, 0, 0};
  CHECK(rank_auc(s, y) == 1.0);

  std::vector<double> ties(6, 0.5);
  std::vector<int> mixed{1, 0, 1, 0, 1, 0};
  CHECK(rank_auc(ties, mixed) == 0.5);

  std::vector<double> s2{0.2, 0.6, 0.4, 0.9};
  std::vector<int> y2{0, 1, 0, 1};
  CHECK(rank_auc(s2, y2) == brute_auc(s2, y2));
  CHECK(rank_auc(s2, y2) == 1.0);
  CHECK(point_biserial(s2, y2) == doctest::Approx(pearson(s2, y2)).epsilon(1e-12));

  std::vector<int> one_class{1, 1, 1, 1};
  CHECK_THROWS_AS(rank_auc(s2, one_class), MetricError);
  CHECK_THROWS_AS(point_biserial(ties, mixed), MetricError);
}

TEST_CASE("rank AUC equals the pairwise definition") {
  SplitMix rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(49);
    std::vector<double> s(n);
    std::vector<int> y(n);
    const bool tied = trial % 2 == 1;
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = tied ? static_cast<double>(rng.below(5)) / 4.0 : rng.uniform();
      y[i] = static_cast<int>(rng.below(2));
    }
    y[0] = 1;
    y[1] = 0;
    const double rank = rank_auc(s, y);
    const double brute = brute_auc(s, y);
    if (tied) {
      CHECK(std::abs(rank - brute) <= 1e-12);
    } else {
      CHECK(rank == brute);
    }
    bool varied = false;
    for (double v : s) varied = varied || v != s[0];
    if (varied) CHECK(std::abs(point_biserial(s, y) - pearson(s, y)) <= 1e-12);
  }
}
