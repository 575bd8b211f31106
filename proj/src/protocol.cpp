#include "skillevo/protocol.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "httplib.h"
#include "skillevo/serialization.hpp"
#include "skillevo/text.hpp"

namespace skillevo {
namespace {

template <typename T>
T require(const Json& obj, const char* key, const char* where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ProtocolError("malformed_request", fmt::format("{} is missing {}", where, key));
  }
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ProtocolError("malformed_request", fmt::format("{}.{} has the wrong type", where, key));
  }
}

void reply_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace

Json ProtocolError::body() const {
  Json error = {{"code", code_}, {"message", what()}};
  for (const auto& [k, v] : extra_.items()) error[k] = v;
  return {{"error", error}};
}

std::string trace_ref(const RolloutRecord& r) {
  const Json j = r;
  return fmt::format("{}-{}-r{}-{}", r.task_id, r.skill_id, r.repeat_index, sha256_hex(j.dump()).substr(0, 12));
}

RolloutService::RolloutService(std::vector<Task> tasks, AgentFactory factory, ProtocolConfig config)
    : factory_(std::move(factory)), config_(std::move(config)) {
  for (auto& t : tasks) {
    const std::string id = t.task_id;
    tasks_.emplace(id, std::move(t));
  }
}

std::string RolloutService::config_yaml() const {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "rollout_server" << YAML::Value << fmt::format("http://{}:{}", config_.host, config_.port);
  out << YAML::Key << "agent" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value << config_.agent_mode;
  if (!config_.agent_model.empty()) out << YAML::Key << "model" << YAML::Value << config_.agent_model;
  if (!config_.agent_base_url.empty()) out << YAML::Key << "base_url" << YAML::Value << config_.agent_base_url;
  out << YAML::EndMap;
  out << YAML::Key << "resources" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "tasks" << YAML::Value << YAML::BeginSeq;
  for (const auto& [id, task] : tasks_) out << id;
  out << YAML::EndSeq;
  out << YAML::Key << "parallelism" << YAML::Value << config_.parallelism;
  out << YAML::EndMap;
  out << YAML::Key << "rollout" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "turn_cap" << YAML::Value << config_.defaults.turn_cap;
  out << YAML::Key << "feedback_budget" << YAML::Value << config_.defaults.feedback_budget;
  out << YAML::Key << "dense_feedback_enabled" << YAML::Value << config_.defaults.dense_feedback_enabled;
  out << YAML::Key << "seed" << YAML::Value << config_.defaults.seed;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

Json RolloutService::run(const Json& request) {
  if (!request.is_object()) throw ProtocolError("malformed_request", "request body must be an object");
  const auto runs = require<Json>(request, "runs", "request");
  if (!runs.is_array() || runs.empty()) throw ProtocolError("malformed_request", "runs must be a non-empty array");

  RolloutSettings settings = config_.defaults;
  if (request.contains("settings")) {
    const auto& s = request.at("settings");
    settings.turn_cap = s.value("turn_cap", settings.turn_cap);
    settings.feedback_budget = s.value("feedback_budget", settings.feedback_budget);
    settings.dense_feedback_enabled = s.value("dense_feedback_enabled", settings.dense_feedback_enabled);
    settings.seed = s.value("seed", settings.seed);
    if (settings.turn_cap < 1 || settings.feedback_budget < 0) {
      throw ProtocolError("malformed_request", "settings out of range");
    }
  }

  // Validate the whole batch before running any of it.
  std::vector<Skill> skills;
  std::vector<const Task*> tasks;
  std::vector<int> first;
  std::vector<int> counts;
  std::vector<bool> include;
  skills.reserve(runs.size());
  for (const auto& r : runs) {
    const auto task_id = require<std::string>(r, "task_id", "run");
    const auto it = tasks_.find(task_id);
    if (it == tasks_.end()) {
      throw ProtocolError("unknown_task", "unknown task_id " + task_id, {{"task_id", task_id}});
    }
    const auto skill_doc = require<Json>(r, "skill", "run");
    Skill skill;
    skill.skill_id = require<std::string>(skill_doc, "skill_id", "skill");
    skill.body = require<std::string>(skill_doc, "body", "skill");
    const int repeats = r.value("repeats", 1);
    if (repeats < 1 || repeats > 64) throw ProtocolError("malformed_request", "repeats must lie in [1,64]");
    tasks.push_back(&it->second);
    skills.push_back(std::move(skill));
    first.push_back(r.value("first_repeat", 0));
    counts.push_back(repeats);
    include.push_back(r.value("include_trace", false));
  }

  std::vector<RolloutJob> jobs;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < skills.size(); ++i) {
    for (int k = 0; k < counts[i]; ++k) {
      jobs.push_back({tasks[i], &skills[i], first[i] + k});
      owner.push_back(i);
    }
  }
  const auto records = config_.parallelism > 1 ? execute_parallel(jobs, factory_, settings, config_.parallelism)
                                               : execute_serial(jobs, factory_, settings);

  Json results = Json::array();
  for (std::size_t j = 0; j < records.size(); ++j) {
    const auto& rec = records[j];
    const std::string ref = trace_ref(rec);
    Json record = rec;
    {
      std::lock_guard lock(traces_mutex_);
      traces_[ref] = record;
    }
    Json item = {{"task_id", rec.task_id},
                 {"skill_id", rec.skill_id},
                 {"repeat_index", rec.repeat_index},
                 {"reward", rec.final_outcome.passed ? 1.0 : 0.0},
                 {"phase", phase_label(rec.phase_reached)},
                 {"infra_failure", rec.infra_failure},
                 {"trace_ref", ref}};
    if (include[owner[j]]) item["record"] = std::move(record);
    results.push_back(std::move(item));
  }
  return {{"results", results}};
}

std::optional<Json> RolloutService::trace(const std::string& ref) const {
  std::lock_guard lock(traces_mutex_);
  const auto it = traces_.find(ref);
  if (it == traces_.end()) return std::nullopt;
  return it->second;
}

ProtocolServer::ProtocolServer(std::shared_ptr<RolloutService> service)
    : service_(std::move(service)), server_(std::make_unique<httplib::Server>()) {
  server_->Get("/global_config_dict_yaml", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(service_->config_yaml(), "application/x-yaml");
  });
  server_->Post("/run", [this](const httplib::Request& req, httplib::Response& res) {
    Json body;
    try {
      body = Json::parse(req.body);
    } catch (const Json::exception& e) {
      reply_json(res, 400, ProtocolError("malformed_request", std::string("invalid JSON: ") + e.what()).body());
      return;
    }
    try {
      reply_json(res, 200, service_->run(body));
    } catch (const ProtocolError& e) {
      reply_json(res, 400, e.body());
    }
  });
  server_->Get(R"(/traces/([A-Za-z0-9_.\-]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto trace = service_->trace(req.matches[1].str());
    if (!trace) {
      reply_json(res, 404, ProtocolError("unknown_trace", "no trace " + req.matches[1].str()).body());
      return;
    }
    reply_json(res, 200, *trace);
  });
}

ProtocolServer::~ProtocolServer() { stop(); }

bool ProtocolServer::listen() { return server_->listen(service_->config().host, service_->config().port); }

int ProtocolServer::bind_any_port() { return server_->bind_to_any_port(service_->config().host); }

bool ProtocolServer::listen_after_bind() { return server_->listen_after_bind(); }

void ProtocolServer::stop() {
  if (server_) server_->stop();
}

std::vector<RolloutRecord> RemoteRolloutExecutor::execute(std::span<const RolloutJob> jobs,
                                                          const RolloutSettings& settings) {
  Json runs = Json::array();
  for (const auto& job : jobs) {
    runs.push_back({{"task_id", job.task->task_id},
                    {"skill", {{"skill_id", job.skill->skill_id}, {"body", job.skill->body}}},
                    {"repeats", 1},
                    {"first_repeat", job.repeat_index},
                    {"include_trace", true}});
  }
  const Json request = {{"runs", runs},
                        {"settings",
                         {{"turn_cap", settings.turn_cap},
                          {"feedback_budget", settings.feedback_budget},
                          {"dense_feedback_enabled", settings.dense_feedback_enabled},
                          {"seed", settings.seed}}}};
  httplib::Client client(base_url_);
  client.set_read_timeout(timeout_seconds_, 0);
  auto res = client.Post("/run", request.dump(), "application/json");
  if (!res) throw std::runtime_error("rollout server unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) throw std::runtime_error(fmt::format("rollout server HTTP {}: {}", res->status, res->body));
  const Json body = Json::parse(res->body);
  const auto& results = body.at("results");
  if (results.size() != jobs.size()) throw std::runtime_error("rollout server returned the wrong number of results");
  std::vector<RolloutRecord> out;
  out.reserve(jobs.size());
  for (const auto& r : results) out.push_back(r.at("record").get<RolloutRecord>());
  return out;
}

}  // namespace skillevo
