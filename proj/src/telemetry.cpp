#include "skillevo/telemetry.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <regex>

#include "skillevo/text.hpp"

namespace skillevo {
namespace {

namespace fs = std::filesystem;

struct FamilyEntry {
  ArtifactFamily family;
  std::string_view name;
  FamilyInfo info;
};

constexpr std::array<FamilyEntry, 15> kFamilies = {{
    {ArtifactFamily::kStatus, "status", {"status.json", ArtifactFormat::kJson, false, true}},
    {ArtifactFamily::kRunConfig, "run_config", {"run_config.json", ArtifactFormat::kJson, false, true}},
    {ArtifactFamily::kExecutionContract,
     "execution_contract",
     {"execution_contract.json", ArtifactFormat::kJson, false, true}},
    {ArtifactFamily::kPreflightReport, "preflight_report", {"preflight_report.json", ArtifactFormat::kJson, false, true}},
    {ArtifactFamily::kRolloutDiagnostics,
     "rollout_diagnostics",
     {"rollout_diagnostics.jsonl", ArtifactFormat::kLines, true, true}},
    {ArtifactFamily::kGenerationMetrics,
     "generation_metrics",
     {"generation_metrics.json", ArtifactFormat::kJson, true, true}},
    {ArtifactFamily::kCombinedSelectionFitness,
     "combined_selection_fitness",
     {"combined_selection_fitness.json", ArtifactFormat::kJson, true, true}},
    {ArtifactFamily::kOracleFeedback, "oracle_feedback", {"oracle_feedback.md", ArtifactFormat::kText, true, true}},
    {ArtifactFamily::kMutationHandoff, "mutation_handoff", {"mutation_handoff.md", ArtifactFormat::kText, true, false}},
    {ArtifactFamily::kLessonBank, "lesson_bank", {"lesson_bank.md", ArtifactFormat::kText, true, true}},
    {ArtifactFamily::kSurvivorSkill, "ea_survivor_skill", {"ea_survivor_skill.md", ArtifactFormat::kText, true, true}},
    {ArtifactFamily::kSkillDocument, "skills", {"skills", ArtifactFormat::kText, true, false}},
    {ArtifactFamily::kSkillSanitization,
     "skill_sanitization",
     {"skill_sanitization.jsonl", ArtifactFormat::kLines, true, false}},
    {ArtifactFamily::kSkillIntegration,
     "skill_integration",
     {"skill_integration.jsonl", ArtifactFormat::kLines, true, false}},
    {ArtifactFamily::kMutationHealth, "mutation_health", {"mutation_health.jsonl", ArtifactFormat::kLines, true, false}},
}};

const FamilyEntry& entry(ArtifactFamily family) {
  for (const auto& e : kFamilies) {
    if (e.family == family) return e;
  }
  throw std::logic_error("unregistered artifact family");
}

enum class Kind { kString, kNumber, kBool, kArray, kObject };

struct FieldRule {
  std::string_view name;
  Kind kind;
  bool non_empty = false;
};

bool kind_matches(const Json& v, Kind kind) {
  switch (kind) {
    case Kind::kString: return v.is_string();
    case Kind::kNumber: return v.is_number();
    case Kind::kBool: return v.is_boolean();
    case Kind::kArray: return v.is_array();
    case Kind::kObject: return v.is_object();
  }
  return false;
}

std::vector<FieldRule> rules_for(ArtifactFamily family) {
  switch (family) {
    case ArtifactFamily::kStatus: return {{"state", Kind::kString, true}};
    case ArtifactFamily::kRunConfig:
      return {{"population_size", Kind::kNumber}, {"generations", Kind::kNumber}, {"repeats", Kind::kNumber},
              {"task_count", Kind::kNumber},      {"seed", Kind::kNumber},        {"condition", Kind::kString, true}};
    case ArtifactFamily::kExecutionContract:
      return {{"allowed_tools", Kind::kArray, true}, {"visible_paths", Kind::kArray}, {"target_paths", Kind::kArray, true}};
    case ArtifactFamily::kPreflightReport: return {{"checks", Kind::kArray, true}, {"ok", Kind::kBool}};
    case ArtifactFamily::kRolloutDiagnostics:
      return {{"task_id", Kind::kString, true}, {"skill_id", Kind::kString, true}, {"repeat_index", Kind::kNumber},
              {"outcome", Kind::kString, true}, {"reward", Kind::kNumber},         {"phase", Kind::kString, true},
              {"num_tool_calls", Kind::kNumber}, {"record", Kind::kObject, true}};
    case ArtifactFamily::kGenerationMetrics:
      return {{"generation", Kind::kNumber}, {"task_id", Kind::kString, true}, {"epsilon", Kind::kNumber},
              {"candidates", Kind::kArray, true}};
    case ArtifactFamily::kCombinedSelectionFitness:
      return {{"generation", Kind::kNumber}, {"survivor_id", Kind::kString, true}, {"candidates", Kind::kArray, true}};
    case ArtifactFamily::kSkillSanitization:
      return {{"skill_id", Kind::kString, true}, {"report", Kind::kObject, true}};
    case ArtifactFamily::kSkillIntegration:
      return {{"skill_id", Kind::kString, true}, {"integrated", Kind::kArray}, {"missing", Kind::kArray}};
    case ArtifactFamily::kMutationHealth:
      return {{"child_slot", Kind::kNumber}, {"parent_id", Kind::kString, true}, {"ok", Kind::kBool}};
    default: return {};
  }
}

}  // namespace

const FamilyInfo& family_info(ArtifactFamily family) { return entry(family).info; }
std::string_view family_name(ArtifactFamily family) { return entry(family).name; }

MissingArtifact::MissingArtifact(ArtifactFamily family, const fs::path& path)
    : std::runtime_error(fmt::format("missing artifact {} ({})", family_name(family), path.string())),
      family_(family) {}

void validate_payload(ArtifactFamily family, const Json& payload) {
  if (!payload.is_object()) throw SchemaViolation(fmt::format("{}: payload must be an object", family_name(family)));
  for (const auto& rule : rules_for(family)) {
    const std::string key(rule.name);
    if (!payload.contains(key) || payload.at(key).is_null()) {
      throw SchemaViolation(fmt::format("{}: missing field {}", family_name(family), key));
    }
    const auto& v = payload.at(key);
    if (!kind_matches(v, rule.kind)) {
      throw SchemaViolation(fmt::format("{}: field {} has the wrong type", family_name(family), key));
    }
    const bool empty = v.is_string() ? v.get_ref<const std::string&>().empty() : (v.is_structured() && v.empty());
    if (rule.non_empty && empty) {
      throw SchemaViolation(fmt::format("{}: field {} is empty", family_name(family), key));
    }
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RunDirectory::RunDirectory(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

fs::path RunDirectory::path_for(ArtifactFamily family, int generation, std::string_view name) const {
  const auto& info = family_info(family);
  fs::path base = root_;
  if (info.per_generation) {
    if (generation < 0) throw std::invalid_argument(fmt::format("{} needs a generation", family_name(family)));
    base /= fmt::format("gen{}", generation);
  }
  if (family == ArtifactFamily::kSkillDocument) {
    if (name.empty()) throw std::invalid_argument("skill documents need a skill id");
    return base / info.file_name / fmt::format("{}.md", name);
  }
  return base / info.file_name;
}

std::vector<int> RunDirectory::generations() const {
  std::vector<int> out;
  static const std::regex gen_re(R"(gen(\d+))");
  if (!fs::exists(root_)) return out;
  for (const auto& e : fs::directory_iterator(root_)) {
    std::smatch m;
    const std::string name = e.path().filename().string();
    if (e.is_directory() && std::regex_match(name, m, gen_re)) out.push_back(std::stoi(m[1].str()));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void RunDirectory::replace_file(const fs::path& path, std::string_view content) {
  fs::create_directories(path.parent_path());
  if (fs::exists(path)) {
    int version = 1;
    fs::path backup;
    do {
      backup = path;
      backup += fmt::format(".v{}", version++);
    } while (fs::exists(backup));
    fs::rename(path, backup);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void RunDirectory::append_line(const fs::path& path, std::string_view line) {
  fs::create_directories(path.parent_path());
  std::string buffer(line);
  buffer += '\n';
  std::ofstream out(path, std::ios::binary | std::ios::app);
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  out.flush();
  if (!out) throw std::runtime_error("append failed: " + path.string());
}

fs::path RunDirectory::write(ArtifactFamily family, int generation, const Json& payload) {
  const auto& info = family_info(family);
  if (info.format == ArtifactFormat::kText) {
    throw std::invalid_argument(fmt::format("{} is a text family", family_name(family)));
  }
  validate_payload(family, payload);
  const auto path = path_for(family, generation);
  std::lock_guard lock(write_mutex_);
  if (info.format == ArtifactFormat::kLines) {
    append_line(path, payload.dump());
  } else {
    replace_file(path, payload.dump(2) + "\n");
  }
  return path;
}

fs::path RunDirectory::write_text(ArtifactFamily family, int generation, std::string_view text, std::string_view name) {
  if (family_info(family).format != ArtifactFormat::kText) {
    throw std::invalid_argument(fmt::format("{} is not a text family", family_name(family)));
  }
  if (trim(text).empty()) throw SchemaViolation(fmt::format("{}: empty document", family_name(family)));
  const auto path = path_for(family, generation, name);
  std::lock_guard lock(write_mutex_);
  replace_file(path, text);
  return path;
}

bool RunDirectory::exists(ArtifactFamily family, int generation, std::string_view name) const {
  return fs::exists(path_for(family, generation, name));
}

Json RunDirectory::read_json(ArtifactFamily family, int generation) const {
  const auto path = path_for(family, generation);
  if (!fs::exists(path)) throw MissingArtifact(family, path);
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& e) {
    throw SchemaDrift(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::vector<Json> RunDirectory::read_lines(ArtifactFamily family, int generation) const {
  const auto path = path_for(family, generation);
  if (!fs::exists(path)) throw MissingArtifact(family, path);
  std::vector<Json> out;
  for (const auto& line : split_lines(read_file(path))) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw SchemaDrift(fmt::format("{}: {}", path.string(), e.what()));
    }
  }
  return out;
}

std::string RunDirectory::read_text(ArtifactFamily family, int generation, std::string_view name) const {
  const auto path = path_for(family, generation, name);
  if (!fs::exists(path)) throw MissingArtifact(family, path);
  return read_file(path);
}

void RunDirectory::check_generation_complete(int generation) const {
  for (const auto& e : kFamilies) {
    if (!e.info.per_generation || !e.info.mandatory) continue;
    const auto path = path_for(e.family, generation);
    if (!fs::exists(path)) throw MissingArtifact(e.family, path);
  }
}

std::string render_lesson_bank(const LessonBank& bank, int generation) {
  std::string out = fmt::format("# Lesson bank (after generation {})\n\n", generation);
  if (bank.empty()) out += "(no lessons)\n";
  for (std::size_t i = 0; i < bank.entries().size(); ++i) {
    const auto& l = bank.entries()[i];
    out += fmt::format("- [{}{}] (gen {}{}) {}\n", to_string(l.tag), bank.is_critical(i) ? "*" : "",
                       l.source_generation, l.from_invalid_candidate ? ", invalid" : "", l.text);
  }
  return out;
}

LessonBank parse_lesson_bank(std::string_view text) {
  static const std::regex line_re(R"(^- \[(KEEP|ADD|REMOVE)(\*?)\] \(gen (\d+)(, invalid)?\) (.+)$)");
  LessonBank bank;
  for (const auto& line : split_lines(text)) {
    if (!line.starts_with("- [")) continue;
    std::smatch m;
    if (!std::regex_match(line, m, line_re)) throw SchemaDrift("unparseable lesson line: " + line);
    Lesson lesson{parse_lesson_tag(m[1].str()), m[5].str(), std::stoi(m[3].str()), m[4].matched};
    const auto index = bank.add(std::move(lesson));
    if (m[2].length() > 0) bank.mark_critical(index);
  }
  return bank;
}

}  // namespace skillevo
