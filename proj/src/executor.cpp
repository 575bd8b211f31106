#include "skillevo/executor.hpp"

#include <omp.h>

namespace skillevo {

RolloutRecord execute_job(const RolloutJob& job, const AgentFactory& factory, const RolloutSettings& settings) {
  try {
    auto agent = factory(*job.task);
    if (!agent) throw AgentError("agent factory returned no agent");
    return run_rollout(*job.task, *job.skill, *agent, settings, job.repeat_index);
  } catch (const std::exception& e) {
    RolloutRecord failed;
    failed.task_id = job.task->task_id;
    failed.skill_id = job.skill->skill_id;
    failed.repeat_index = job.repeat_index;
    failed.infra_failure = true;
    failed.final_outcome.infra_failure = true;
    failed.final_outcome.sanitized_tail = "rollout aborted before final verification";
    return failed;
  }
}

std::vector<RolloutRecord> execute_serial(std::span<const RolloutJob> jobs, const AgentFactory& factory,
                                          const RolloutSettings& settings) {
  std::vector<RolloutRecord> out;
  out.reserve(jobs.size());
  for (const auto& job : jobs) out.push_back(execute_job(job, factory, settings));
  return out;
}

std::vector<RolloutRecord> execute_parallel(std::span<const RolloutJob> jobs, const AgentFactory& factory,
                                            const RolloutSettings& settings, int threads) {
  std::vector<RolloutRecord> out(jobs.size());
  const auto n = static_cast<long>(jobs.size());
  // execute_job does not throw, so no exception can escape the parallel region.
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = execute_job(jobs[static_cast<std::size_t>(i)], factory, settings);
  }
  return out;
}

std::vector<RolloutRecord> LocalRolloutExecutor::execute(std::span<const RolloutJob> jobs,
                                                         const RolloutSettings& settings) {
  if (parallelism_ <= 1) return execute_serial(jobs, factory_, settings);
  return execute_parallel(jobs, factory_, settings, parallelism_);
}

}  // namespace skillevo
