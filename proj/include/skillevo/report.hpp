#pragma once

// Post-hoc reports over run directories: per-generation quality tables with
// SEM over valid candidates, a task x condition pass grid, and calibration of
// per-rollout progress scores against final outcomes. Everything is read from
// disk; nothing depends on the wall clock.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "skillevo/metrics.hpp"

namespace skillevo {

// Directories under `root` (inclusive) that hold a run_config.json, sorted.
std::vector<std::filesystem::path> discover_runs(const std::filesystem::path& root);

struct MeanSem {
  int n = 0;
  double mean = 0.0;
  // Absent for fewer than two samples.
  std::optional<double> sem;
};

MeanSem mean_sem(const std::vector<double>& values);

struct GenerationRow {
  std::string group;  // "<root name>/<condition>"
  int generation = 0;
  int valid = 0;
  int excluded = 0;
  MeanSem select_q;
  MeanSem skill_q;
  MeanSem agent_progress_q;
  MeanSem agent_variance_q;
};

struct PassCell {
  std::string task_id;
  std::string condition;
  int passes = 0;
  int rollouts = 0;
};

struct Report {
  std::vector<GenerationRow> generations;
  std::vector<PassCell> pass_grid;
  std::vector<std::string> notes;
};

// Throws MissingArtifact when a run lacks a mandatory file.
Report build_report(const std::vector<std::filesystem::path>& roots);

std::string generation_table_tsv(const Report& report);
std::string pass_grid_tsv(const Report& report);

// Writes generation_quality.tsv, pass_grid.tsv and report_notes.txt.
void write_report(const Report& report, const std::filesystem::path& out_dir);

struct CalibrationPoint {
  std::string task_id;
  std::string category_id;
  int label = 0;
  double score = 0.0;
};

struct CalibrationGroup {
  std::string category_id;
  int label = 0;
  int n = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population form
};

struct CalibrationReport {
  std::vector<CalibrationPoint> points;
  Calibration stats;
  std::vector<CalibrationGroup> groups;
  // Mean and standard deviation per outcome over all categories.
  std::vector<CalibrationGroup> overall;
};

// Reads rollout_diagnostics.jsonl files, or every such file under a directory.
std::vector<CalibrationPoint> load_calibration_points(const std::vector<std::filesystem::path>& inputs);

// Throws MetricError (kDegenerateInput) for a single class.
CalibrationReport build_calibration(std::vector<CalibrationPoint> points);

// Writes calibration.tsv, calibration_points.tsv and calibration_groups.tsv.
void write_calibration(const CalibrationReport& report, const std::filesystem::path& out_dir);

}  // namespace skillevo
