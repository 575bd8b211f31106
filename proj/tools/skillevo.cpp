// Command-line entry point: run, validate, report, calibrate, replay, serve.

#include <fmt/format.h>

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "skillevo/chat.hpp"
#include "skillevo/experiment.hpp"
#include "skillevo/protocol.hpp"
#include "skillevo/replay.hpp"
#include "skillevo/report.hpp"
#include "skillevo/scripted_agent.hpp"
#include "skillevo/simulator.hpp"

namespace {

using namespace skillevo;
namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kConfigError = 2;

void print_violations(const InvalidConfig& e) {
  for (const auto& v : e.violations()) std::cerr << fmt::format("config error: {}: {}\n", v.field, v.reason);
}

struct RunArgs {
  std::string manifest;
  std::string condition;
  bool simulator = false;
  std::optional<std::uint64_t> seed;
  std::string out;
  int parallel = 1;
  bool replay = false;
  std::vector<std::string> overrides;
  std::string prompts = "skills/optimizer";
};

RunOptions to_options(const RunArgs& a) {
  RunOptions o;
  o.overrides = a.overrides;
  if (!a.condition.empty()) o.condition = parse_condition(a.condition);
  o.seed = a.seed;
  if (!a.out.empty()) o.output_root = fs::path(a.out);
  o.task_parallelism = a.parallel;
  o.replay = a.replay;
  return o;
}

int cmd_run(const RunArgs& a) {
  const auto manifest = load_manifest(a.manifest);
  const auto options = to_options(a);
  const auto factory = a.simulator ? simulator_services() : endpoint_services(a.prompts);
  const auto rows = run_manifest(manifest, options, factory, std::cout);
  std::cout << "\n" << format_summary_table(rows);
  int failures = 0;
  for (const auto& r : rows) {
    failures += r.failures();
    for (const auto& t : r.task_outcomes) {
      if (t.replay_diffs > 0 || !t.replay_survivors_match) ++failures;
    }
  }
  if (failures > 0) {
    std::cerr << fmt::format("{} task run(s) failed\n", failures);
    return kRunFailure;
  }
  return kOk;
}

int cmd_validate(const RunArgs& a) {
  const auto manifest = load_manifest(a.manifest);
  const auto options = to_options(a);
  int runs = 0;
  int tasks = 0;
  for (const auto& r : manifest.runs) {
    if (options.condition && *options.condition != r.condition) continue;
    RunConfig config = load_run_config(r.config);
    for (const auto& o : options.overrides) apply_override(config, o);
    check_condition(config, r.condition);
    tasks += static_cast<int>(load_tasks(r.task).size());
    read_file(r.seed_skill.value_or(manifest.seed_skill));
    ++runs;
  }
  std::cout << fmt::format("manifest ok: {} run(s), {} task loop(s)\n", runs, tasks);
  return kOk;
}

int cmd_replay(const std::vector<std::string>& roots) {
  int bad = 0;
  for (const auto& root : roots) {
    for (const auto& dir : discover_runs(root)) {
      const auto result = replay_metrics(dir);
      for (const auto& d : result.diffs) std::cout << dir.string() << ": " << format_diff(d) << "\n";
      for (const auto& g : result.generations) {
        if (g.stored_survivor != g.replayed_survivor) {
          std::cout << fmt::format("{}: gen{} survivor stored={} replayed={}\n", dir.string(), g.generation,
                                   g.stored_survivor, g.replayed_survivor);
        }
      }
      std::cout << fmt::format("{}: {} generation(s), {} diff(s), survivors {}\n", dir.string(),
                               result.generations.size(), result.diffs.size(),
                               result.survivors_match() ? "match" : "differ");
      if (!result.clean()) ++bad;
    }
  }
  return bad == 0 ? kOk : kRunFailure;
}

ProtocolServer* g_server = nullptr;

int cmd_serve(const std::string& scenarios, const std::string& config_path, const std::string& host, int port,
              int parallel, const std::string& manifest_path, const std::string& prompts) {
  RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
  ProtocolConfig pc;
  pc.host = host;
  pc.port = port;
  pc.defaults = rollout_settings(config);
  pc.parallelism = parallel;
  AgentFactory factory = scripted_agent_factory(ScriptedPolicy::kSolve);
  if (!manifest_path.empty()) {
    const auto manifest = load_manifest(manifest_path);
    if (!manifest.endpoint) throw InvalidConfig(std::vector<ConfigViolation>{{"endpoint", "manifest names no endpoint"}});
    const char* key = std::getenv(kApiKeyVariable);
    auto client = std::make_shared<const ChatClient>(*manifest.endpoint, http_transport(*manifest.endpoint, key ? key : ""));
    factory = [client, prompt = load_prompts(prompts).agent](const Task&) {
      return std::make_unique<ChatAgent>(client, prompt);
    };
    pc.agent_mode = "chat";
    pc.agent_model = manifest.endpoint->model;
    pc.agent_base_url = manifest.endpoint->base_url;
  }
  auto service = std::make_shared<RolloutService>(load_tasks(scenarios), std::move(factory), pc);
  ProtocolServer server(service);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::cout << fmt::format("serving on http://{}:{}\n", host, port) << std::flush;
  if (!server.listen()) {
    std::cerr << fmt::format("cannot bind {}:{}\n", host, port);
    return kRunFailure;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Test-time skill evolution orchestrator"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto add_run_flags = [&run_args](CLI::App* sub) {
    sub->add_option("--manifest", run_args.manifest, "Experiment manifest (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--condition", run_args.condition, "Only execute runs with this condition (C1..C4)");
    sub->add_option("--override", run_args.overrides, "Config override key=value (repeatable)");
  };
  auto* run = app.add_subcommand("run", "Execute the runs listed in a manifest");
  add_run_flags(run);
  run->add_flag("--simulator", run_args.simulator, "Use the deterministic simulator agent and rule-based stages");
  run->add_option("--seed", run_args.seed, "Override the run seed");
  run->add_option("--out", run_args.out, "Override the manifest output root");
  run->add_option("--parallel", run_args.parallel, "Concurrent task loops")->check(CLI::PositiveNumber);
  run->add_flag("--replay", run_args.replay, "Replay every finished run and report metric diffs");
  run->add_option("--prompts", run_args.prompts, "Directory with agent/oracle/mutator prompts");

  auto* validate = app.add_subcommand("validate", "Check a manifest, its configs and scenarios");
  add_run_flags(validate);

  std::vector<std::string> report_roots;
  std::string report_out = "report";
  auto* report = app.add_subcommand("report", "Generation quality tables and pass grid");
  report->add_option("roots", report_roots, "Run roots")->required();
  report->add_option("--out", report_out, "Output directory");

  std::vector<std::string> calib_inputs;
  std::string calib_out = "calibration";
  auto* calib = app.add_subcommand("calibrate", "Point-biserial r and AUC of progress scores against outcomes");
  calib->add_option("inputs", calib_inputs, "rollout_diagnostics.jsonl files or run roots")->required();
  calib->add_option("--out", calib_out, "Output directory");

  std::vector<std::string> replay_roots;
  auto* replay = app.add_subcommand("replay", "Recompute metrics from disk and diff them against stored values");
  replay->add_option("roots", replay_roots, "Run roots")->required();

  std::string scenarios = "scenarios";
  std::string serve_config;
  std::string host = "127.0.0.1";
  int port = 8088;
  int serve_parallel = 1;
  std::string serve_manifest;
  std::string serve_prompts = "skills/optimizer";
  auto* serve = app.add_subcommand("serve", "Serve the HTTP rollout protocol");
  serve->add_option("--scenarios", scenarios, "Scenario file or directory");
  serve->add_option("--config", serve_config, "Run configuration (YAML) for rollout defaults");
  serve->add_option("--host", host);
  serve->add_option("--port", port);
  serve->add_option("--parallel", serve_parallel, "Rollouts executed concurrently per batch")->check(CLI::PositiveNumber);
  serve->add_option("--manifest", serve_manifest, "Use the manifest's model endpoint instead of the scripted agent");
  serve->add_option("--prompts", serve_prompts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*validate) return cmd_validate(run_args);
    if (*report) {
      std::vector<fs::path> roots(report_roots.begin(), report_roots.end());
      const auto r = build_report(roots);
      write_report(r, report_out);
      std::cout << generation_table_tsv(r) << "\n" << pass_grid_tsv(r);
      for (const auto& n : r.notes) std::cout << "note: " << n << "\n";
      return kOk;
    }
    if (*calib) {
      std::vector<fs::path> inputs(calib_inputs.begin(), calib_inputs.end());
      const auto r = build_calibration(load_calibration_points(inputs));
      write_calibration(r, calib_out);
      std::cout << fmt::format("n={} point_biserial={:.4f} auc={:.4f}\n", r.points.size(), r.stats.point_biserial,
                               r.stats.auc);
      return kOk;
    }
    if (*replay) return cmd_replay(replay_roots);
    if (*serve) return cmd_serve(scenarios, serve_config, host, port, serve_parallel, serve_manifest, serve_prompts);
  } catch (const InvalidConfig& e) {
    print_violations(e);
    return kConfigError;
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return kConfigError;
  } catch (const MetricError& e) {
    std::cerr << "metric error: " << e.what() << "\n";
    return kRunFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailure;
  }
  return kOk;
}
