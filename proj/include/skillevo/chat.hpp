#pragma once

// Chat-completion endpoint client and the model-backed agent, oracle and
// mutator. Requests use the OpenAI-style /chat/completions schema with
// function tools. The API key comes from the SKILLEVO_API_KEY environment
// variable and is never persisted.

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include "skillevo/harness.hpp"
#include "skillevo/manifest.hpp"
#include "skillevo/mutator.hpp"
#include "skillevo/oracle.hpp"

namespace skillevo {

inline constexpr const char* kApiKeyVariable = "SKILLEVO_API_KEY";

class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& message, bool retryable) : std::runtime_error(message), retryable_(retryable) {}
  bool retryable() const { return retryable_; }

 private:
  bool retryable_;
};

// Sends one request body and returns the parsed response. Throws TransportError.
using ChatTransport = std::function<Json(const Json& request)>;

ChatTransport http_transport(const EndpointConfig& endpoint, std::string api_key);

class ChatClient {
 public:
  ChatClient(EndpointConfig endpoint, ChatTransport transport);

  // Returns choices[0].message. A retryable failure is attempted
  // 1 + endpoint.retries times in total.
  Json complete(const Json& messages, double temperature, const Json& tools = Json()) const;
  const EndpointConfig& endpoint() const { return endpoint_; }

 private:
  EndpointConfig endpoint_;
  ChatTransport transport_;
};

// Function-tool schema for every registered tool the contract allows.
Json tool_schemas(const ToolRegistry& tools, const VisibilityContract& contract);

class ChatAgent final : public Agent {
 public:
  ChatAgent(std::shared_ptr<const ChatClient> client, std::string system_prompt)
      : client_(std::move(client)), system_prompt_(std::move(system_prompt)) {}

  void begin(const AgentSetup& setup) override;
  AgentAction next_action(const AgentTurn& turn) override;

 private:
  std::shared_ptr<const ChatClient> client_;
  std::string system_prompt_;
  Json messages_ = Json::array();
  Json tools_ = Json::array();
  std::string pending_call_id_;
};

class ChatOracle final : public Oracle {
 public:
  ChatOracle(std::shared_ptr<const ChatClient> client, std::string system_prompt)
      : client_(std::move(client)), system_prompt_(std::move(system_prompt)) {}
  OracleSummary summarize(const OracleInput& input) override;

 private:
  std::shared_ptr<const ChatClient> client_;
  std::string system_prompt_;
};

class ChatMutator final : public Mutator {
 public:
  ChatMutator(std::shared_ptr<const ChatClient> client, std::string system_prompt)
      : client_(std::move(client)), system_prompt_(std::move(system_prompt)) {}
  std::string propose(const MutationRequest& request) override;

 private:
  std::shared_ptr<const ChatClient> client_;
  std::string system_prompt_;
};

// Compact textual evidence for the oracle prompt.
std::string render_oracle_evidence(const OracleInput& input);

// Strips a surrounding ``` fence from a model reply.
std::string strip_code_fence(const std::string& text);

struct ChatPrompts {
  std::string agent;
  std::string oracle;
  std::string mutator;
};

// Reads agent.md, oracle.md and mutator.md from the directory.
ChatPrompts load_prompts(const std::filesystem::path& directory);

}  // namespace skillevo
