#include "skillevo/harness.hpp"

#include <fmt/format.h>

#include <algorithm>

#include "skillevo/simulator.hpp"
#include "skillevo/text.hpp"

namespace skillevo {
namespace {

constexpr std::size_t kSummaryLimit = 240;

std::string summarize(const std::string& text) {
  if (text.size() <= kSummaryLimit) return text;
  return text.substr(0, kSummaryLimit) + "...";
}

ToolCallResult ok(std::string text, Json details = Json::object()) { return {{true, std::move(text), std::move(details)}, {}}; }
ToolCallResult fail(std::string text) { return {{false, std::move(text), Json::object()}, {}}; }

std::string string_arg(const Json& args, const char* key) {
  if (!args.is_object() || !args.contains(key) || !args.at(key).is_string()) return {};
  return args.at(key).get<std::string>();
}

ToolCallResult list_dir(ToolContext& ctx, const Json&) {
  return ok(join_lines(ctx.workspace.paths()), {{"paths", ctx.workspace.paths()}});
}

ToolCallResult read_file(ToolContext& ctx, const Json& args) {
  const auto path = string_arg(args, "path");
  if (!ctx.workspace.contains(path)) return fail("no such file: " + path);
  return ok(ctx.workspace.read(path));
}

ToolCallResult search_text(ToolContext& ctx, const Json& args) {
  const auto pattern = string_arg(args, "pattern");
  if (pattern.empty()) return fail("search_text requires a pattern");
  std::vector<std::string> hits;
  for (const auto& [path, content] : ctx.workspace.files()) {
    const auto lines = split_lines(content);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].find(pattern) != std::string::npos) hits.push_back(fmt::format("{}:{}: {}", path, i + 1, lines[i]));
    }
  }
  return ok(hits.empty() ? "no matches" : join_lines(hits), {{"matches", hits.size()}});
}

ToolCallResult write_file(ToolContext& ctx, const Json& args) {
  const auto path = string_arg(args, "path");
  try {
    ctx.workspace.write(path, string_arg(args, "content"));
  } catch (const WorkspaceError& e) {
    return fail(e.what());
  }
  ctx.feedback.record_edit();
  ToolCallResult r = ok("wrote " + path);
  r.files_written = {path};
  return r;
}

// {path, find, replace}: replaces the first occurrence; an empty `find`
// appends `replace` before the file's closing anchor line if one is given.
ToolCallResult edit_file(ToolContext& ctx, const Json& args) {
  const auto path = string_arg(args, "path");
  if (!ctx.workspace.contains(path)) return fail("no such file: " + path);
  std::string content = ctx.workspace.read(path);
  const auto find = string_arg(args, "find");
  const auto replace = string_arg(args, "replace");
  if (find.empty()) {
    content = insert_fragment(content, replace, string_arg(args, "anchor"));
  } else {
    const auto pos = content.find(find);
    if (pos == std::string::npos) return fail("edit anchor not found in " + path);
    content.replace(pos, find.size(), replace);
  }
  ctx.workspace.write(path, std::move(content));
  ctx.feedback.record_edit();
  ToolCallResult r = ok("edited " + path);
  r.files_written = {path};
  return r;
}

ToolCallResult compile(ToolContext& ctx, const Json& args) {
  std::vector<std::string> files;
  if (args.is_object() && args.contains("files") && args.at("files").is_array()) {
    for (const auto& f : args.at("files")) {
      if (f.is_string()) files.push_back(f.get<std::string>());
    }
  }
  auto out = ctx.env.compile(ctx.workspace, files);
  ctx.feedback.record_compile(out.ok);
  return {out, {}};
}

ToolCallResult simulate(ToolContext& ctx, const Json&) { return {ctx.env.simulate(ctx.workspace), {}}; }

ToolCallResult show_changes(ToolContext& ctx, const Json&) {
  std::vector<std::string> changed;
  for (const auto& [path, content] : ctx.workspace.files()) {
    if (!ctx.initial.contains(path)) {
      changed.push_back("added " + path);
    } else if (ctx.initial.read(path) != content) {
      changed.push_back("modified " + path);
    }
  }
  return ok(changed.empty() ? "no changes" : join_lines(changed), {{"changed", changed}});
}

ToolCallResult verify_feedback(ToolContext& ctx, const Json& args) {
  auto result = request_feedback(ctx.feedback, string_arg(args, "reason"), ctx.env, ctx.workspace);
  if (const auto* refusal = std::get_if<FeedbackRefusal>(&result)) {
    return {{false, refusal_message(*refusal), {{"refusal", to_string(*refusal)}}}, {}};
  }
  const auto& obs = std::get<FeedbackObservation>(result);
  std::string text = fmt::format("mode={} phase={}", to_string(obs.mode), phase_label(obs.phase));
  if (obs.tests_total) text += fmt::format(" tests_failed={} tests_total={}", *obs.tests_failed, *obs.tests_total);
  text += "\nhint: " + obs.next_focus_hint;
  return ok(std::move(text), {{"observation", to_json(obs)}});
}

ToolCallResult finish(ToolContext&, const Json&) { return ok("finished"); }

VerifierOutcome final_verification(const Environment& env, const Workspace& workspace) {
  const auto obs = sanitize_verifier_output(env.run_hidden_verifier(workspace), env.contract());
  VerifierOutcome out;
  out.passed = obs.mode == FeedbackMode::kPass;
  out.tests_total = obs.tests_total;
  out.tests_failed = obs.tests_failed;
  out.phase = obs.phase;
  out.exit_code = obs.exit_code;
  out.sanitized_tail = join_lines(obs.summary_lines);
  out.infra_failure = obs.mode == FeedbackMode::kFailInfra;
  return out;
}

}  // namespace

void ToolRegistry::add(std::string name, ToolSpec spec) { entries_[std::move(name)] = std::move(spec); }

const ToolSpec& ToolRegistry::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("unknown tool: " + name);
  return it->second;
}

std::vector<std::string> ToolRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

ToolRegistry ToolRegistry::standard(bool dense_feedback_enabled) {
  ToolRegistry r;
  r.add("list_dir", {ToolKind::kInspect, Json::object(), "List workspace files.", list_dir});
  r.add("read_file", {ToolKind::kInspect, {{"path", "string"}}, "Read one workspace file.", read_file});
  r.add("search_text",
        {ToolKind::kInspect, {{"pattern", "string"}}, "Find lines containing a literal pattern.", search_text});
  r.add("write_file", {ToolKind::kEdit, {{"path", "string"}, {"content", "string"}}, "Create or overwrite a file.",
                       write_file});
  r.add("edit_file",
        {ToolKind::kEdit,
         {{"path", "string"}, {"find", "string"}, {"replace", "string"}, {"anchor", "string"}},
         "Replace the first occurrence of `find`, or insert `replace` before `anchor` when `find` is empty.",
         edit_file});
  r.add("compile", {ToolKind::kCompile, {{"files", "string[]"}}, "Compile the design (default: target files).",
                    compile});
  r.add("simulate", {ToolKind::kSimulate, Json::object(), "Run the visible local testbench.", simulate});
  r.add("show_changes", {ToolKind::kOther, Json::object(), "Summarize changes against the initial workspace.",
                         show_changes});
  if (dense_feedback_enabled) {
    r.add("verify_feedback",
          {ToolKind::kFeedback, {{"reason", "string"}},
           "Budgeted sanitized check against the hidden tests; needs an edit, a successful compile and a change "
           "since the previous call.",
           verify_feedback});
  }
  r.add("finish", {ToolKind::kOther, Json::object(), "End the attempt.", finish});
  return r;
}

VisibilityContract execution_contract(const Environment& env, bool dense_feedback_enabled) {
  VisibilityContract c = env.contract();
  auto& allowed = c.allowed_tools;
  allowed.erase(std::remove(allowed.begin(), allowed.end(), "verify_feedback"), allowed.end());
  if (dense_feedback_enabled) allowed.push_back("verify_feedback");
  if (std::find(c.known_tools.begin(), c.known_tools.end(), "verify_feedback") == c.known_tools.end()) {
    c.known_tools.push_back("verify_feedback");
  }
  return c;
}

std::uint64_t rollout_seed(std::uint64_t run_seed, const Task& task, const Skill& skill, int repeat_index) {
  const std::string seed_text = std::to_string(run_seed);
  const std::string repeat_text = std::to_string(repeat_index);
  const std::string body_hash = sha256_hex(skill.body);
  return stable_seed({seed_text, task.task_id, body_hash, repeat_text});
}

RolloutSettings rollout_settings(const RunConfig& config) {
  return {config.turn_cap, config.feedback_budget, config.dense_feedback_enabled, config.seed};
}

RolloutRecord run_rollout(const Task& task, const Skill& skill, Agent& agent, const RolloutSettings& settings,
                          int repeat_index) {
  if (!task.environment) throw WorkspaceError("task has no environment: " + task.task_id);
  const Environment& env = *task.environment;
  const auto registry = ToolRegistry::standard(settings.dense_feedback_enabled);
  const auto contract = execution_contract(env, settings.dense_feedback_enabled);

  RolloutRecord record;
  record.task_id = task.task_id;
  record.skill_id = skill.skill_id;
  record.repeat_index = repeat_index;

  const Workspace initial = env.initial_workspace();
  Workspace workspace = initial;
  FeedbackSession session;
  session.enabled = settings.dense_feedback_enabled;
  session.budget = settings.feedback_budget;
  ToolContext ctx{env, initial, workspace, session};

  bool agent_failed = false;
  try {
    agent.begin({&task, &skill, &contract, &registry, repeat_index,
                 rollout_seed(settings.seed, task, skill, repeat_index)});
    std::optional<ToolEvent> last;
    std::string last_output;
    for (int turn = 1; turn <= settings.turn_cap; ++turn) {
      AgentAction action = agent.next_action({turn, settings.turn_cap, last, last_output});
      ToolEvent event;
      event.turn = turn;
      event.tool_name = action.tool;
      event.arguments = action.arguments;
      event.note = action.note;
      record.turns_used = turn;
      if (!registry.contains(action.tool)) {
        event.kind = ToolKind::kOther;
        event.succeeded = false;
        event.result_summary = "tool not available: " + action.tool;
        last_output = event.result_summary;
      } else {
        const auto& spec = registry.at(action.tool);
        auto result = spec.handler(ctx, action.arguments);
        event.kind = spec.kind;
        event.succeeded = result.output.ok;
        event.result_summary = summarize(result.output.text);
        last_output = std::move(result.output.text);
        event.details = std::move(result.output.details);
        event.files_written = std::move(result.files_written);
      }
      record.events.push_back(event);
      if (action.tool == "finish") break;
      last = std::move(event);
    }
  } catch (const AgentError&) {
    agent_failed = true;
  }

  record.feedback_calls_used = session.calls_used;
  record.phase_reached = derive_phase(record.events);
  record.final_outcome = final_verification(env, workspace);
  if (agent_failed) {
    record.final_outcome.passed = false;
    record.final_outcome.infra_failure = true;
  }
  record.infra_failure = record.final_outcome.infra_failure;
  return record;
}

}  // namespace skillevo
