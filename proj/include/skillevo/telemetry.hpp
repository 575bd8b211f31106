#pragma once

// Run-directory layout and artifact persistence.
//
//   <root>/status.json  run_config.json  execution_contract.json  preflight_report.json
//   <root>/gen<g>/rollout_diagnostics.jsonl  generation_metrics.json
//                combined_selection_fitness.json  oracle_feedback.md  lesson_bank.md
//                ea_survivor_skill.md  mutation_handoff.md  skills/<skill_id>.md
//                skill_sanitization.jsonl  skill_integration.jsonl  mutation_health.jsonl
//
// Line families (.jsonl) are append-only. Document families are replaced on
// write; the previous version is kept as <name>.v<n>.

#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "skillevo/core.hpp"

namespace skillevo {

enum class ArtifactFamily {
  kStatus,
  kRunConfig,
  kExecutionContract,
  kPreflightReport,
  kRolloutDiagnostics,
  kGenerationMetrics,
  kCombinedSelectionFitness,
  kOracleFeedback,
  kMutationHandoff,
  kLessonBank,
  kSurvivorSkill,
  kSkillDocument,
  kSkillSanitization,
  kSkillIntegration,
  kMutationHealth,
};

enum class ArtifactFormat { kLines, kJson, kText };

struct FamilyInfo {
  std::string_view file_name;  // for kSkillDocument: the directory name
  ArtifactFormat format;
  bool per_generation;
  bool mandatory;
};

const FamilyInfo& family_info(ArtifactFamily family);
std::string_view family_name(ArtifactFamily family);

class MissingArtifact : public std::runtime_error {
 public:
  MissingArtifact(ArtifactFamily family, const std::filesystem::path& path);
  ArtifactFamily family() const { return family_; }

 private:
  ArtifactFamily family_;
};

class SchemaViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class SchemaDrift : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Throws SchemaViolation when a mandatory field is missing, null, or empty.
void validate_payload(ArtifactFamily family, const Json& payload);

class RunDirectory {
 public:
  explicit RunDirectory(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path path_for(ArtifactFamily family, int generation = -1, std::string_view name = {}) const;
  // Generation indices with a directory on disk, ascending.
  std::vector<int> generations() const;

  std::filesystem::path write(ArtifactFamily family, int generation, const Json& payload);
  std::filesystem::path write_text(ArtifactFamily family, int generation, std::string_view text,
                                   std::string_view name = {});

  Json read_json(ArtifactFamily family, int generation = -1) const;
  std::vector<Json> read_lines(ArtifactFamily family, int generation) const;
  std::string read_text(ArtifactFamily family, int generation, std::string_view name = {}) const;
  bool exists(ArtifactFamily family, int generation = -1, std::string_view name = {}) const;

  // Throws MissingArtifact naming the first absent mandatory family.
  void check_generation_complete(int generation) const;

 private:
  void replace_file(const std::filesystem::path& path, std::string_view content);
  void append_line(const std::filesystem::path& path, std::string_view line);

  std::filesystem::path root_;
  std::mutex write_mutex_;
};

// lesson_bank.md: one "- [TAG] (gen N) text" line per entry; '*' after the tag
// marks a critical lesson and ", invalid" after the generation marks lessons
// sourced only from invalid candidates.
std::string render_lesson_bank(const LessonBank& bank, int generation);
LessonBank parse_lesson_bank(std::string_view text);

std::string read_file(const std::filesystem::path& path);

}  // namespace skillevo
