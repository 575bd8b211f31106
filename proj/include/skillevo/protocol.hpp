#pragma once

// HTTP rollout protocol.
//
//   GET  /global_config_dict_yaml   server addresses and rollout settings (YAML)
//   POST /run                       {"runs": [{"task_id", "skill": {"skill_id", "body"},
//                                              "repeats", "first_repeat", "include_trace"}],
//                                    "settings": {"turn_cap", "feedback_budget",
//                                                 "dense_feedback_enabled", "seed"}}
//                                   -> {"results": [{"task_id", "skill_id", "repeat_index",
//                                                    "reward", "phase", "trace_ref", "record"?}]}
//   GET  /traces/<ref>              the full rollout record behind a trace_ref
//
// Rejected requests get HTTP 400 (or 404 for unknown traces) and
// {"error": {"code", "message", ...}}.

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "skillevo/executor.hpp"

namespace httplib {
class Server;
}

namespace skillevo {

struct ProtocolConfig {
  std::string host = "127.0.0.1";
  int port = 8088;
  std::string agent_mode = "scripted";
  std::string agent_model;
  std::string agent_base_url;
  RolloutSettings defaults;
  int parallelism = 1;
};

class ProtocolError : public std::invalid_argument {
 public:
  ProtocolError(std::string code, const std::string& message, Json extra = Json::object())
      : std::invalid_argument(message), code_(std::move(code)), extra_(std::move(extra)) {}
  const std::string& code() const { return code_; }
  Json body() const;

 private:
  std::string code_;
  Json extra_;
};

// Request handling without the transport, shared by the server and tests.
class RolloutService {
 public:
  RolloutService(std::vector<Task> tasks, AgentFactory factory, ProtocolConfig config);

  std::string config_yaml() const;
  // Throws ProtocolError.
  Json run(const Json& request);
  std::optional<Json> trace(const std::string& ref) const;

  const ProtocolConfig& config() const { return config_; }

 private:
  std::map<std::string, Task> tasks_;
  AgentFactory factory_;
  ProtocolConfig config_;
  mutable std::mutex traces_mutex_;
  std::map<std::string, Json> traces_;
};

class ProtocolServer {
 public:
  ProtocolServer(std::shared_ptr<RolloutService> service);
  ~ProtocolServer();

  // Binds and serves until stop(); returns false when binding fails.
  bool listen();
  // Binds to an ephemeral port and returns it, or -1.
  int bind_any_port();
  bool listen_after_bind();
  void stop();

 private:
  std::shared_ptr<RolloutService> service_;
  std::unique_ptr<httplib::Server> server_;
};

// Executor that sends every job of a generation to a protocol server in one
// POST /run batch. Jobs are sent with their skill body, so the server needs
// no state from earlier batches.
class RemoteRolloutExecutor final : public RolloutExecutor {
 public:
  explicit RemoteRolloutExecutor(std::string base_url, int timeout_seconds = 600)
      : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {}
  std::vector<RolloutRecord> execute(std::span<const RolloutJob> jobs, const RolloutSettings& settings) override;

 private:
  std::string base_url_;
  int timeout_seconds_;
};

std::string trace_ref(const RolloutRecord& record);

}  // namespace skillevo
