#pragma once

// Fan-out of the K x R rollouts of one generation. Results are returned in
// job order regardless of how they were scheduled.

#include <span>
#include <vector>

#include "skillevo/harness.hpp"

namespace skillevo {

struct RolloutJob {
  const Task* task = nullptr;
  const Skill* skill = nullptr;
  int repeat_index = 0;
};

class RolloutExecutor {
 public:
  virtual ~RolloutExecutor() = default;
  virtual std::vector<RolloutRecord> execute(std::span<const RolloutJob> jobs, const RolloutSettings& settings) = 0;
};

// Runs one job. An agent constructor failure or a WorkspaceError is recorded
// as a failed rollout with the infra flag instead of being thrown.
RolloutRecord execute_job(const RolloutJob& job, const AgentFactory& factory, const RolloutSettings& settings);

// Serial reference path.
std::vector<RolloutRecord> execute_serial(std::span<const RolloutJob> jobs, const AgentFactory& factory,
                                          const RolloutSettings& settings);

// OpenMP fan-out over jobs; bit-identical to execute_serial.
std::vector<RolloutRecord> execute_parallel(std::span<const RolloutJob> jobs, const AgentFactory& factory,
                                            const RolloutSettings& settings, int threads);

class LocalRolloutExecutor final : public RolloutExecutor {
 public:
  LocalRolloutExecutor(AgentFactory factory, int parallelism) : factory_(std::move(factory)), parallelism_(parallelism) {}
  std::vector<RolloutRecord> execute(std::span<const RolloutJob> jobs, const RolloutSettings& settings) override;

 private:
  AgentFactory factory_;
  int parallelism_;
};

}  // namespace skillevo
