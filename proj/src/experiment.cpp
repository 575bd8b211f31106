#include "skillevo/experiment.hpp"

#include <fmt/format.h>

#include <atomic>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <thread>

#include "skillevo/chat.hpp"
#include "skillevo/protocol.hpp"
#include "skillevo/replay.hpp"
#include "skillevo/scripted_agent.hpp"
#include "skillevo/simulator.hpp"
#include "skillevo/telemetry.hpp"

namespace skillevo {

namespace fs = std::filesystem;

std::vector<Task> load_tasks(const fs::path& path) {
  std::vector<Task> tasks;
  if (fs::is_directory(path)) {
    for (const auto& s : load_scenarios(path)) tasks.push_back(make_task(s));
  } else {
    tasks.push_back(make_task(load_scenario(path)));
  }
  if (tasks.empty()) throw InvalidConfig(std::vector<ConfigViolation>{{"task", "no scenarios in " + path.string()}});
  return tasks;
}

ServicesFactory simulator_services() {
  return [](const ExperimentManifest&, const RunConfig& config) {
    return rule_based_services(scripted_agent_factory(ScriptedPolicy::kSolve), config.parallelism);
  };
}

ServicesFactory endpoint_services(fs::path prompt_dir) {
  return [prompt_dir](const ExperimentManifest& manifest, const RunConfig& config) {
    if (!manifest.endpoint) {
      throw InvalidConfig(std::vector<ConfigViolation>{{"endpoint", "manifest names no model endpoint"}});
    }
    const char* key = std::getenv(kApiKeyVariable);
    auto client = std::make_shared<const ChatClient>(*manifest.endpoint,
                                                     http_transport(*manifest.endpoint, key ? key : ""));
    const auto prompts = load_prompts(prompt_dir);
    Services s;
    if (manifest.rollout_server) {
      s.executor = std::make_shared<RemoteRolloutExecutor>(*manifest.rollout_server);
    } else {
      AgentFactory factory = [client, prompt = prompts.agent](const Task&) {
        return std::make_unique<ChatAgent>(client, prompt);
      };
      s.executor = std::make_shared<LocalRolloutExecutor>(std::move(factory), config.parallelism);
    }
    s.oracle = std::make_shared<ChatOracle>(client, prompts.oracle);
    s.mutator = std::make_shared<ChatMutator>(client, prompts.mutator);
    return s;
  };
}

int ConditionSummary::failures() const {
  return static_cast<int>(std::count_if(task_outcomes.begin(), task_outcomes.end(),
                                        [](const TaskOutcome& t) { return t.error.has_value(); }));
}

TaskOutcome summarize_history(const TaskHistory& history) {
  TaskOutcome out;
  out.task_id = history.task_id;
  out.error = history.error;
  for (const auto& g : history.generations) {
    for (const auto& r : g.rollouts) {
      ++out.rollouts;
      if (r.final_outcome.passed) ++out.passes;
    }
    for (const auto& e : g.evaluations) out.agent_q.push_back(e.progress.agent_progress_q);
  }
  return out;
}

ConditionSummary summarize_condition(Condition condition, const RunConfig& config, std::vector<TaskOutcome> outcomes) {
  ConditionSummary s;
  s.condition = condition;
  s.label = std::string(to_string(condition));
  s.ea_enabled = config.ea_enabled;
  s.dense_feedback_enabled = config.dense_feedback_enabled;
  std::vector<double> q;
  for (const auto& t : outcomes) {
    s.rollouts += t.rollouts;
    s.passes += t.passes;
    if (t.passes > 0) ++s.solved;
    q.insert(q.end(), t.agent_q.begin(), t.agent_q.end());
  }
  s.tasks = static_cast<int>(outcomes.size());
  s.pass_rate = s.rollouts > 0 ? static_cast<double>(s.passes) / s.rollouts : 0.0;
  s.agent_q = q.empty() ? 0.0 : std::accumulate(q.begin(), q.end(), 0.0) / static_cast<double>(q.size());
  s.task_outcomes = std::move(outcomes);
  return s;
}

std::vector<ConditionSummary> run_manifest(const ExperimentManifest& manifest, const RunOptions& options,
                                           const ServicesFactory& factory, std::ostream& log) {
  // Resolve and validate everything before any run starts.
  struct Prepared {
    const ManifestRun* run;
    RunConfig config;
    std::vector<Task> tasks;
    Skill seed;
    fs::path root;
  };
  std::vector<Prepared> prepared;
  std::multiset<std::string> labels;
  for (const auto& r : manifest.runs) labels.insert(std::string(to_string(r.condition)));
  const fs::path output_root = options.output_root.value_or(manifest.output_root);
  for (std::size_t i = 0; i < manifest.runs.size(); ++i) {
    const auto& r = manifest.runs[i];
    if (options.condition && *options.condition != r.condition) continue;
    RunConfig config = load_run_config(r.config);
    for (const auto& o : options.overrides) apply_override(config, o);
    if (options.seed) config.seed = *options.seed;
    check_condition(config, r.condition);
    const std::string label(to_string(r.condition));
    auto tasks = load_tasks(r.task);
    Skill seed = make_seed_skill(read_file(r.seed_skill.value_or(manifest.seed_skill)));
    const fs::path root = output_root / (labels.count(label) > 1 ? fmt::format("{}_{}", label, i) : label);
    prepared.push_back({&r, config, std::move(tasks), std::move(seed), root});
  }
  if (prepared.empty()) throw InvalidConfig(std::vector<ConfigViolation>{{"condition", "no manifest run selected"}});

  std::vector<ConditionSummary> out;
  std::mutex log_mutex;
  for (auto& p : prepared) {
    Services services = factory(manifest, p.config);
    std::vector<TaskOutcome> outcomes(p.tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < p.tasks.size(); i = next++) {
        const auto& task = p.tasks[i];
        const fs::path dir = p.root / task.task_id;
        if (fs::exists(dir)) fs::remove_all(dir);
        const auto history = run_task(task, p.seed, p.config, services, dir, std::string(to_string(p.run->condition)));
        TaskOutcome t = summarize_history(history);
        t.run_dir = dir;
        if (options.replay && !t.error) {
          try {
            const auto replay = replay_metrics(dir);
            t.replay_diffs = replay.diffs.size();
            t.replay_survivors_match = replay.survivors_match();
          } catch (const std::exception& e) {
            t.error = std::string("replay: ") + e.what();
          }
        }
        std::lock_guard lock(log_mutex);
        log << fmt::format("[{}] {} passes={}/{}{}{}\n", to_string(p.run->condition), task.task_id, t.passes,
                           t.rollouts, t.error ? " error: " + *t.error : "",
                           options.replay ? fmt::format(" replay_diffs={}{}", t.replay_diffs,
                                                        t.replay_survivors_match ? "" : " survivor_mismatch")
                                          : "");
        outcomes[i] = std::move(t);
      }
    };
    const int threads = std::max(1, std::min<int>(options.task_parallelism, static_cast<int>(p.tasks.size())));
    if (threads == 1) {
      worker();
    } else {
      std::vector<std::thread> pool;
      for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
      for (auto& t : pool) t.join();
    }
    out.push_back(summarize_condition(p.run->condition, p.config, std::move(outcomes)));
  }
  return out;
}

std::string format_summary_table(const std::vector<ConditionSummary>& rows) {
  std::string out = fmt::format("{:<5} {:<4} {:<6} {:>9} {:>10} {:>9} {:>7}\n", "Cfg", "EA", "Dense", "Rollouts",
                                "Pass Rate", "Solved", "AgentQ");
  for (const auto& r : rows) {
    out += fmt::format("{:<5} {:<4} {:<6} {:>9} {:>9.1f}% {:>9} {:>7.3f}\n", r.label, r.ea_enabled ? "Yes" : "No",
                       r.dense_feedback_enabled ? "Yes" : "No", r.rollouts, 100.0 * r.pass_rate,
                       fmt::format("{}/{}", r.solved, r.tasks), r.agent_q);
  }
  return out;
}

}  // namespace skillevo
