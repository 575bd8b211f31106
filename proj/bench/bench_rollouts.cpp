// Serial reference executor against the OpenMP executor on one generation's
// worth of simulator rollouts per shipped scenario.

#include <benchmark/benchmark.h>

#include <filesystem>

#include "skillevo/executor.hpp"
#include "skillevo/scripted_agent.hpp"
#include "skillevo/simulator.hpp"

using namespace skillevo;

namespace {

struct Workload {
  std::vector<Task> tasks;
  std::vector<Skill> skills;
  std::vector<RolloutJob> jobs;
  RolloutSettings settings;

  Workload() {
    for (const auto& s : load_scenarios(std::filesystem::path(SKILLEVO_ASSET_DIR) / "scenarios")) {
      tasks.push_back(make_task(s));
    }
    for (int k = 0; k < 4; ++k) {
      Skill s;
      s.skill_id = "gen0_ind" + std::to_string(k);
      s.body = "- Inspect the sources first.\n- Compile after every edit.\n";
      skills.push_back(s);
    }
    for (const auto& t : tasks) {
      for (const auto& s : skills) {
        for (int r = 0; r < 4; ++r) jobs.push_back({&t, &s, r});
      }
    }
    settings.dense_feedback_enabled = true;
    settings.seed = 1;
  }
};

const Workload& workload() {
  static const Workload w;
  return w;
}

void BM_Serial(benchmark::State& state) {
  const auto& w = workload();
  const auto factory = scripted_agent_factory();
  for (auto _ : state) benchmark::DoNotOptimize(execute_serial(w.jobs, factory, w.settings));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(w.jobs.size()));
}

void BM_OpenMP(benchmark::State& state) {
  const auto& w = workload();
  const auto factory = scripted_agent_factory();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(execute_parallel(w.jobs, factory, w.settings, threads));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(w.jobs.size()));
}

}  // namespace

BENCHMARK(BM_Serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_OpenMP)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
