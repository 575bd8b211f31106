#include "skillevo/chat.hpp"

#include <fmt/format.h>

#include <regex>

#include "httplib.h"
#include "skillevo/telemetry.hpp"
#include "skillevo/text.hpp"

namespace skillevo {
namespace {

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path without trailing slash
};

ParsedUrl parse_url(const std::string& url) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, url_re)) throw TransportError("malformed endpoint url: " + url, false);
  std::string prefix = m[2].matched ? m[2].str() : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str(), prefix};
}

std::string message_text(const Json& message) {
  if (!message.contains("content") || message.at("content").is_null()) return {};
  const auto& c = message.at("content");
  if (c.is_string()) return c.get<std::string>();
  std::string out;
  for (const auto& part : c) {
    if (part.contains("text")) out += part.at("text").get<std::string>();
  }
  return out;
}

std::string type_label_to_schema(const std::string& label) {
  if (label == "string[]") return "array";
  return label;
}

}  // namespace

ChatTransport http_transport(const EndpointConfig& endpoint, std::string api_key) {
  const auto url = parse_url(endpoint.base_url);
  return [url, api_key = std::move(api_key), timeout = endpoint.timeout_seconds](const Json& request) {
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout, 0);
    client.set_read_timeout(timeout, 0);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    auto res = client.Post(url.prefix + "/chat/completions", headers, request.dump(), "application/json");
    if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()), true);
    if (res->status == 429 || res->status >= 500) {
      throw TransportError(fmt::format("endpoint returned HTTP {}", res->status), true);
    }
    if (res->status != 200) throw TransportError(fmt::format("endpoint returned HTTP {}", res->status), false);
    try {
      return Json::parse(res->body);
    } catch (const Json::exception& e) {
      throw TransportError(std::string("unparseable response: ") + e.what(), false);
    }
  };
}

ChatClient::ChatClient(EndpointConfig endpoint, ChatTransport transport)
    : endpoint_(std::move(endpoint)), transport_(std::move(transport)) {}

Json ChatClient::complete(const Json& messages, double temperature, const Json& tools) const {
  Json request = {{"model", endpoint_.model},
                  {"messages", messages},
                  {"temperature", temperature},
                  {"max_tokens", endpoint_.max_tokens}};
  if (tools.is_array() && !tools.empty()) request["tools"] = tools;
  const int attempts = 1 + endpoint_.retries;
  for (int attempt = 1;; ++attempt) {
    try {
      const Json response = transport_(request);
      if (!response.contains("choices") || response.at("choices").empty()) {
        throw TransportError("response has no choices", false);
      }
      return response.at("choices").at(0).at("message");
    } catch (const TransportError& e) {
      if (!e.retryable() || attempt >= attempts) throw;
    } catch (const Json::exception& e) {
      throw TransportError(std::string("malformed response: ") + e.what(), false);
    }
  }
}

Json tool_schemas(const ToolRegistry& tools, const VisibilityContract& contract) {
  Json out = Json::array();
  for (const auto& [name, spec] : tools.entries()) {
    if (!contract.tool_allowed(name)) continue;
    Json properties = Json::object();
    Json required = Json::array();
    for (const auto& [arg, label] : spec.argument_schema.items()) {
      const std::string type = type_label_to_schema(label.get<std::string>());
      Json prop = {{"type", type}};
      if (type == "array") prop["items"] = {{"type", "string"}};
      properties[arg] = prop;
      if (type != "array") required.push_back(arg);
    }
    out.push_back({{"type", "function"},
                   {"function",
                    {{"name", name},
                     {"description", spec.description},
                     {"parameters", {{"type", "object"}, {"properties", properties}, {"required", required}}}}}});
  }
  return out;
}

void ChatAgent::begin(const AgentSetup& setup) {
  const Task& task = *setup.task;
  std::string system = system_prompt_;
  system += "\n\n# Skill\n\n" + setup.skill->body;
  std::string user = fmt::format("Task {}:\n{}\n\nTarget files: {}\nWorkspace files: {}\n", task.task_id, task.prompt,
                                 fmt::join(setup.contract->target_paths, ", "),
                                 fmt::join(setup.contract->visible_paths, ", "));
  messages_ = Json::array({{{"role", "system"}, {"content", system}}, {{"role", "user"}, {"content", user}}});
  tools_ = tool_schemas(*setup.tools, *setup.contract);
  pending_call_id_.clear();
}

AgentAction ChatAgent::next_action(const AgentTurn& turn) {
  if (turn.last_event && !pending_call_id_.empty()) {
    messages_.push_back({{"role", "tool"}, {"tool_call_id", pending_call_id_}, {"content", turn.last_output}});
  } else if (turn.last_event) {
    messages_.push_back({{"role", "user"}, {"content", turn.last_output}});
  }
  pending_call_id_.clear();
  Json message;
  try {
    message = client_->complete(messages_, client_->endpoint().temperature, tools_);
  } catch (const TransportError& e) {
    throw AgentError(e.what());
  }
  Json assistant = {{"role", "assistant"}, {"content", message_text(message)}};
  if (message.contains("tool_calls") && message.at("tool_calls").is_array() && !message.at("tool_calls").empty()) {
    // One call per turn; later calls in the same reply are dropped.
    const Json call = message.at("tool_calls").at(0);
    assistant["tool_calls"] = Json::array({call});
    messages_.push_back(assistant);
    pending_call_id_ = call.value("id", fmt::format("call_{}", turn.turn));
    AgentAction action;
    try {
      action.tool = call.at("function").at("name").get<std::string>();
      const auto& raw = call.at("function").at("arguments");
      action.arguments = raw.is_string() ? Json::parse(raw.get<std::string>()) : raw;
    } catch (const Json::exception& e) {
      throw AgentError(std::string("malformed tool call: ") + e.what());
    }
    action.note = trim(message_text(message));
    return action;
  }
  messages_.push_back(assistant);
  return {"finish", Json::object(), trim(message_text(message))};
}

std::string render_oracle_evidence(const OracleInput& input) {
  std::string out = "## SELECTION\n";
  for (const auto& c : input.candidates) {
    const auto& e = *c.evaluation;
    out += fmt::format("- {} pass@1={:.2f} SelectQ={:.6f} progress_mean={:.3f} lcb={:.3f} SkillQ={:.3f}{}\n",
                       e.skill_id, e.pass_rate, e.select_q, e.progress.mean, e.progress.lcb, e.skill_q,
                       e.invalid ? " INVALID" : "");
  }
  out += "\n## TRACES\n";
  for (const auto& c : input.candidates) {
    for (const auto& r : c.rollouts) {
      out += fmt::format("### {} r{} {} {}\n", r.skill_id, r.repeat_index, r.final_outcome.passed ? "pass" : "fail",
                         phase_label(r.phase_reached));
      for (const auto& ev : r.events) {
        out += fmt::format("- t{} {}", ev.turn, ev.tool_name);
        if (!ev.files_written.empty()) out += fmt::format(" [{}]", fmt::join(ev.files_written, ", "));
        if (!ev.note.empty()) out += " : " + ev.note;
        if (ev.details.contains("tests_failed")) out += fmt::format(" (failed={})", ev.details["tests_failed"].dump());
        if (ev.details.contains("observation")) {
          const auto& obs = ev.details["observation"];
          out += fmt::format(" (feedback {} failed={})", obs.value("final_mode", "?"),
                             obs.contains("tests_failed") ? obs["tests_failed"].dump() : "?");
        }
        out += "\n";
      }
    }
  }
  out += "\n## BANK\n";
  out += input.bank ? render_lesson_bank(*input.bank, input.generation) : "(none)\n";
  out += "\n## SURVIVOR\n" + (input.survivor ? input.survivor->body : std::string("(none)"));
  return out;
}

OracleSummary ChatOracle::summarize(const OracleInput& input) {
  OracleSummary summary;
  fill_selection_stats(input, summary);
  Json messages = Json::array({{{"role", "system"}, {"content", system_prompt_}},
                               {{"role", "user"}, {"content", render_oracle_evidence(input)}}});
  try {
    const Json message = client_->complete(messages, input.temperature);
    parse_lesson_lines(message_text(message), summary);
  } catch (const TransportError& e) {
    throw OracleFailure(e.what());
  }
  // Lessons the survivor already states are retained rather than added.
  if (input.survivor) {
    std::vector<std::string> add;
    for (auto& lesson : summary.add) {
      (default_matcher().contains(input.survivor->body, lesson) ? summary.keep : add).push_back(lesson);
    }
    summary.add = std::move(add);
  }
  return summary;
}

std::string strip_code_fence(const std::string& text) {
  auto lines = split_lines(text);
  while (!lines.empty() && trim(lines.front()).empty()) lines.erase(lines.begin());
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.size() >= 2 && trim(lines.front()).starts_with("```") && trim(lines.back()) == "```") {
    lines.erase(lines.begin());
    lines.pop_back();
  }
  return join_lines(lines);
}

std::string ChatMutator::propose(const MutationRequest& request) {
  std::string user = "## SURVIVOR SKILL\n" + request.survivor->body + "\n";
  if (request.handoff) user += "\n## HANDOFF\n" + render_mutation_handoff(*request.handoff) + "\n";
  if (request.bank) user += "\n## LESSON BANK\n" + render_lesson_bank(*request.bank, request.generation) + "\n";
  user += fmt::format("\nProduce child {} of generation {}.\n", request.slot, request.generation);
  Json messages = Json::array({{{"role", "system"}, {"content", system_prompt_}}, {{"role", "user"}, {"content", user}}});
  std::string body;
  try {
    body = strip_code_fence(message_text(client_->complete(messages, request.temperature)));
  } catch (const TransportError& e) {
    throw MutatorFailure(e.what());
  }
  if (trim(body).empty()) throw MutatorFailure("mutator returned an empty skill");
  return body;
}

ChatPrompts load_prompts(const std::filesystem::path& directory) {
  return {read_file(directory / "agent.md"), read_file(directory / "oracle.md"), read_file(directory / "mutator.md")};
}

}  // namespace skillevo
