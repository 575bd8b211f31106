#include "skillevo/simulator.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <set>

namespace skillevo {
namespace {

DiscoveryChannel parse_channel(const std::string& text) {
  if (text == "compile") return DiscoveryChannel::kCompile;
  if (text == "simulate") return DiscoveryChannel::kSimulate;
  if (text == "feedback") return DiscoveryChannel::kFeedback;
  if (text == "lesson") return DiscoveryChannel::kLessonOnly;
  throw ScenarioError("unknown discovery channel: " + text);
}

template <typename T>
T field(const Json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void require(bool condition, const std::string& message) {
  if (!condition) throw ScenarioError(message);
}

}  // namespace

const std::vector<std::string>& standard_tool_names() {
  static const std::vector<std::string> kNames = {"list_dir", "read_file",   "search_text", "write_file",
                                                  "edit_file", "compile",    "simulate",    "show_changes",
                                                  "verify_feedback", "finish"};
  return kNames;
}

Scenario parse_scenario(const Json& doc) {
  Scenario s;
  try {
    s.task_id = doc.at("task_id").get<std::string>();
    s.category_id = field<std::string>(doc, "category_id", "cid000");
    s.prompt = doc.at("prompt").get<std::string>();
    for (const auto& f : doc.at("files")) s.files.push_back({f.at("path"), f.at("content")});
    s.target_paths = doc.at("target_paths").get<std::vector<std::string>>();
    s.shadow_paths = field<std::vector<std::string>>(doc, "shadow_paths", {});
    s.hidden_identifiers = field<std::vector<std::string>>(doc, "hidden_identifiers", {});
    s.unavailable_tools = field<std::vector<std::string>>(doc, "unavailable_tools", {});
    s.base_edit = {doc.at("base_edit").at("path"), doc.at("base_edit").at("content")};
    s.anchor = field<std::string>(doc, "anchor", "endmodule");
    for (const auto& p : doc.at("predicates")) {
      s.predicates.push_back({p.at("id"), p.at("path"), p.at("contains").get<std::vector<std::string>>(),
                              field(p, "syntactic", false), field(p, "hidden", true), field(p, "local", true)});
    }
    for (const auto& f : field<Json>(doc, "fixes", Json::array())) {
      s.fixes.push_back({f.at("id"), f.at("lesson"), field<std::string>(f, "path", s.base_edit.path),
                         f.at("fragment"), parse_channel(field<std::string>(f, "discover", "lesson")),
                         field(f, "probability", 0.0)});
    }
    for (const auto& t : field<Json>(doc, "traps", Json::array())) {
      s.traps.push_back({t.at("path"), field(t, "probability", 0.0)});
    }
  } catch (const Json::exception& e) {
    throw ScenarioError(std::string("malformed scenario: ") + e.what());
  }

  require(!s.task_id.empty(), "scenario task_id is empty");
  require(!s.target_paths.empty(), "scenario has no target paths");
  require(!s.predicates.empty(), "scenario has no predicates");
  std::set<std::string> ids;
  for (const auto& p : s.predicates) {
    require(ids.insert(p.id).second, "duplicate predicate id: " + p.id);
    require(!p.contains.empty(), "predicate without content: " + p.id);
  }
  for (const auto& f : s.fixes) {
    require(f.probability >= 0.0 && f.probability <= 1.0, "fix probability outside [0,1]: " + f.id);
  }
  for (const auto& t : s.traps) {
    require(t.probability >= 0.0 && t.probability <= 1.0, "trap probability outside [0,1]: " + t.path);
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario: " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ScenarioError("malformed scenario " + path.string() + ": " + e.what());
  }
  return parse_scenario(doc);
}

std::vector<Scenario> load_scenarios(const std::filesystem::path& directory) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(directory)) {
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Scenario> out;
  for (const auto& f : files) out.push_back(load_scenario(f));
  return out;
}

std::string insert_fragment(const std::string& content, const std::string& fragment, const std::string& anchor) {
  if (content.find(fragment) != std::string::npos) return content;
  const auto pos = anchor.empty() ? std::string::npos : content.rfind(anchor);
  if (pos == std::string::npos) {
    std::string out = content;
    if (!out.empty() && out.back() != '\n') out += '\n';
    return out + fragment + '\n';
  }
  const auto line_start = content.rfind('\n', pos);
  const auto at = line_start == std::string::npos ? 0 : line_start + 1;
  return content.substr(0, at) + fragment + '\n' + content.substr(at);
}

SimulatedEnvironment::SimulatedEnvironment(Scenario scenario) : scenario_(std::move(scenario)) {
  for (const auto& name : standard_tool_names()) {
    if (name != "verify_feedback") contract_.allowed_tools.push_back(name);
    contract_.known_tools.push_back(name);
  }
  for (const auto& t : scenario_.unavailable_tools) contract_.known_tools.push_back(t);
  std::set<std::string> visible;
  for (const auto& f : scenario_.files) visible.insert(f.path);
  for (const auto& t : scenario_.target_paths) visible.insert(t);
  contract_.visible_paths.assign(visible.begin(), visible.end());
  contract_.hidden_identifiers = scenario_.hidden_identifiers;
  contract_.target_paths = scenario_.target_paths;
  contract_.shadow_paths = scenario_.shadow_paths;
  contract_.hidden_verifier_available = true;
}

bool SimulatedEnvironment::predicate_holds(const Predicate& p, const Workspace& workspace) const {
  if (!workspace.contains(p.path)) return false;
  const auto& content = workspace.read(p.path);
  return std::all_of(p.contains.begin(), p.contains.end(),
                     [&](const std::string& needle) { return content.find(needle) != std::string::npos; });
}

int SimulatedEnvironment::unmet_hidden(const Workspace& workspace) const {
  int unmet = 0;
  for (const auto& p : scenario_.predicates) {
    if (p.hidden && !predicate_holds(p, workspace)) ++unmet;
  }
  return unmet;
}

std::vector<std::string> SimulatedEnvironment::syntax_errors(const Workspace& workspace,
                                                             const std::vector<std::string>& files) const {
  std::vector<std::string> errors;
  for (const auto& f : files) {
    if (!workspace.contains(f)) errors.push_back(fmt::format("{}: file not found", f));
  }
  for (const auto& p : scenario_.predicates) {
    if (!p.syntactic || std::find(files.begin(), files.end(), p.path) == files.end()) continue;
    if (workspace.contains(p.path) && !predicate_holds(p, workspace)) {
      errors.push_back(fmt::format("{}: syntax error near '{}'", p.path, p.contains.front()));
    }
  }
  return errors;
}

ToolOutput SimulatedEnvironment::compile(const Workspace& workspace, const std::vector<std::string>& files) const {
  const auto& inputs = files.empty() ? scenario_.target_paths : files;
  const auto errors = syntax_errors(workspace, inputs);
  ToolOutput out;
  out.ok = errors.empty();
  if (out.ok) {
    out.text = fmt::format("compiled {} file(s) without errors", inputs.size());
  } else {
    out.text = "compilation failed\n";
    for (const auto& e : errors) out.text += e + '\n';
  }
  out.details = {{"files", inputs}, {"errors", static_cast<int>(errors.size())}};
  return out;
}

ToolOutput SimulatedEnvironment::simulate(const Workspace& workspace) const {
  ToolOutput out;
  const auto errors = syntax_errors(workspace, scenario_.target_paths);
  if (!errors.empty()) {
    out.ok = false;
    out.text = "simulation not started: design does not compile";
    out.details = {{"executed", false}};
    return out;
  }
  int total = 0;
  int failed = 0;
  for (const auto& p : scenario_.predicates) {
    if (!p.local) continue;
    ++total;
    if (!predicate_holds(p, workspace)) ++failed;
  }
  out.ok = true;
  out.text = fmt::format("local testbench: {} checks, {} passed, {} failed", total, total - failed, failed);
  out.details = {{"executed", true}, {"tests_total", total}, {"tests_failed", failed}};
  return out;
}

RawVerifierBundle SimulatedEnvironment::run_hidden_verifier(Workspace private_copy) const {
  RawVerifierBundle bundle;
  const std::string harness = scenario_.hidden_identifiers.empty() ? "hidden_harness" : scenario_.hidden_identifiers.front();
  std::string log = fmt::format("collecting tests from /harness/{}\n", harness);
  log += "Dockerfile: FROM sim-runner:latest\n";

  const auto errors = syntax_errors(private_copy, scenario_.target_paths);
  if (!errors.empty()) {
    for (const auto& e : errors) log += fmt::format("COMPILE ERROR: {} (invoked by {})\n", e, harness);
    bundle.exit_code = 2;
    bundle.log = std::move(log);
    return bundle;
  }

  int total = 0;
  int failed = 0;
  for (const auto& p : scenario_.predicates) {
    if (!p.hidden) continue;
    ++total;
    const bool ok = predicate_holds(p, private_copy);
    if (!ok) ++failed;
    log += fmt::format("{}::test_{} {}\n", harness, p.id, ok ? "PASSED" : "FAILED");
  }
  log += fmt::format("TESTS={} PASS={} FAIL={}\n", total, total - failed, failed);
  if (failed > 0) {
    log += fmt::format("AssertionError: {} hidden checks did not match the expected behavior\n", failed);
    log += fmt::format("ERROR: Failed {} of {} tests\n", failed, total);
  }
  bundle.exit_code = failed > 0 ? 1 : 0;
  bundle.log = std::move(log);
  return bundle;
}

Task make_task(std::shared_ptr<const SimulatedEnvironment> env) {
  const auto& s = env->scenario();
  Task task{s.task_id, s.category_id, s.prompt, s.files, std::move(env)};
  validate_task(task);
  return task;
}

Task make_task(const Scenario& scenario) { return make_task(std::make_shared<const SimulatedEnvironment>(scenario)); }

}  // namespace skillevo
