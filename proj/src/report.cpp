#include "skillevo/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "skillevo/telemetry.hpp"

namespace skillevo {

namespace fs = std::filesystem;

namespace {

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : "NA"; }

void write_text_file(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

std::vector<fs::path> discover_runs(const fs::path& root) {
  std::vector<fs::path> out;
  if (fs::exists(root / "run_config.json")) return {root};
  if (!fs::is_directory(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() == "run_config.json") out.push_back(e.path().parent_path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

MeanSem mean_sem(const std::vector<double>& values) {
  MeanSem m;
  m.n = static_cast<int>(values.size());
  if (values.empty()) return m;
  m.mean = std::accumulate(values.begin(), values.end(), 0.0) / m.n;
  if (m.n >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - m.mean) * (v - m.mean);
    m.sem = std::sqrt(ss / (m.n - 1)) / std::sqrt(static_cast<double>(m.n));
  }
  return m;
}

Report build_report(const std::vector<fs::path>& roots) {
  Report report;
  std::map<std::pair<std::string, std::string>, PassCell> grid;
  for (const auto& root : roots) {
    const auto runs = discover_runs(root);
    if (runs.empty()) throw MissingArtifact(ArtifactFamily::kRunConfig, root / "run_config.json");
    // group -> generation -> metric samples
    struct Samples {
      std::vector<double> select_q, skill_q, progress_q, variance_q;
      int excluded = 0;
    };
    std::map<std::string, std::map<int, Samples>> groups;
    for (const auto& dir : runs) {
      RunDirectory run(dir);
      const Json config = run.read_json(ArtifactFamily::kRunConfig);
      const std::string condition = config.value("condition", "custom");
      const std::string group = fmt::format("{}/{}", root.filename().string(), condition);
      for (int g : run.generations()) {
        const Json fitness = run.read_json(ArtifactFamily::kCombinedSelectionFitness, g);
        auto& s = groups[group][g];
        for (const auto& c : fitness.at("candidates")) {
          if (c.at("invalid").get<bool>()) {
            ++s.excluded;
            continue;
          }
          s.select_q.push_back(c.at("SelectQ"));
          s.skill_q.push_back(c.at("SkillQ"));
          s.progress_q.push_back(c.at("AgentBehaviorQ"));
          s.variance_q.push_back(c.at("AgentVarianceQ"));
        }
        for (const auto& line : run.read_lines(ArtifactFamily::kRolloutDiagnostics, g)) {
          auto& cell = grid[{line.at("task_id").get<std::string>(), condition}];
          cell.task_id = line.at("task_id");
          cell.condition = condition;
          ++cell.rollouts;
          if (line.at("outcome") == "pass") ++cell.passes;
        }
      }
    }
    for (const auto& [group, gens] : groups) {
      for (const auto& [g, s] : gens) {
        if (s.select_q.empty()) {
          report.notes.push_back(
              fmt::format("{} gen{}: no valid candidates ({} invalid); excluded from means", group, g, s.excluded));
          continue;
        }
        GenerationRow row;
        row.group = group;
        row.generation = g;
        row.valid = static_cast<int>(s.select_q.size());
        row.excluded = s.excluded;
        row.select_q = mean_sem(s.select_q);
        row.skill_q = mean_sem(s.skill_q);
        row.agent_progress_q = mean_sem(s.progress_q);
        row.agent_variance_q = mean_sem(s.variance_q);
        report.generations.push_back(row);
      }
    }
  }
  for (auto& [key, cell] : grid) report.pass_grid.push_back(cell);
  return report;
}

std::string generation_table_tsv(const Report& report) {
  std::string out =
      "group\tgeneration\tvalid\texcluded\tSelectQ_mean\tSelectQ_sem\tSkillQ_mean\tSkillQ_sem\t"
      "AgentProgressQ_mean\tAgentProgressQ_sem\tAgentVarianceQ_mean\tAgentVarianceQ_sem\n";
  for (const auto& r : report.generations) {
    out += fmt::format("{}\t{}\t{}\t{}\t{:.6f}\t{}\t{:.6f}\t{}\t{:.6f}\t{}\t{:.6f}\t{}\n", r.group, r.generation,
                       r.valid, r.excluded, r.select_q.mean, fmt_opt(r.select_q.sem), r.skill_q.mean,
                       fmt_opt(r.skill_q.sem), r.agent_progress_q.mean, fmt_opt(r.agent_progress_q.sem),
                       r.agent_variance_q.mean, fmt_opt(r.agent_variance_q.sem));
  }
  return out;
}

std::string pass_grid_tsv(const Report& report) {
  std::vector<std::string> conditions;
  std::vector<std::string> tasks;
  for (const auto& c : report.pass_grid) {
    if (std::find(conditions.begin(), conditions.end(), c.condition) == conditions.end()) conditions.push_back(c.condition);
    if (std::find(tasks.begin(), tasks.end(), c.task_id) == tasks.end()) tasks.push_back(c.task_id);
  }
  std::sort(conditions.begin(), conditions.end());
  std::sort(tasks.begin(), tasks.end());
  std::string out = "task_id";
  for (const auto& c : conditions) out += "\t" + c;
  out += "\n";
  for (const auto& t : tasks) {
    out += t;
    for (const auto& c : conditions) {
      const auto it = std::find_if(report.pass_grid.begin(), report.pass_grid.end(),
                                   [&](const PassCell& p) { return p.task_id == t && p.condition == c; });
      out += it == report.pass_grid.end() ? "\tNA" : fmt::format("\t{}/{}", it->passes, it->rollouts);
    }
    out += "\n";
  }
  return out;
}

void write_report(const Report& report, const fs::path& out_dir) {
  write_text_file(out_dir / "generation_quality.tsv", generation_table_tsv(report));
  write_text_file(out_dir / "pass_grid.tsv", pass_grid_tsv(report));
  std::string notes;
  for (const auto& n : report.notes) notes += n + "\n";
  write_text_file(out_dir / "report_notes.txt", notes);
}

std::vector<CalibrationPoint> load_calibration_points(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (e.is_regular_file() && e.path().filename() == "rollout_diagnostics.jsonl") files.push_back(e.path());
      }
    } else if (fs::exists(in)) {
      files.push_back(in);
    } else {
      throw MissingArtifact(ArtifactFamily::kRolloutDiagnostics, in);
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<CalibrationPoint> points;
  for (const auto& f : files) {
    for (const auto& line : split_lines(read_file(f))) {
      if (trim(line).empty()) continue;
      const Json j = Json::parse(line);
      if (!j.contains("progress_score")) throw SchemaDrift(f.string() + ": record lacks progress_score");
      points.push_back({j.at("task_id"), j.value("category_id", ""), j.at("outcome") == "pass" ? 1 : 0,
                        j.at("progress_score")});
    }
  }
  return points;
}

CalibrationReport build_calibration(std::vector<CalibrationPoint> points) {
  CalibrationReport r;
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& p : points) {
    scores.push_back(p.score);
    labels.push_back(p.label);
  }
  r.stats = calibrate(scores, labels);
  auto summarize = [](const std::string& category, int label, const std::vector<double>& v) {
    CalibrationGroup g{category, label, static_cast<int>(v.size()), 0.0, 0.0};
    g.mean = std::accumulate(v.begin(), v.end(), 0.0) / g.n;
    double ss = 0.0;
    for (double x : v) ss += (x - g.mean) * (x - g.mean);
    g.stddev = std::sqrt(ss / g.n);
    return g;
  };
  std::map<std::pair<std::string, int>, std::vector<double>> by_group;
  std::map<int, std::vector<double>> by_label;
  for (const auto& p : points) {
    by_group[{p.category_id, p.label}].push_back(p.score);
    by_label[p.label].push_back(p.score);
  }
  for (const auto& [key, v] : by_group) r.groups.push_back(summarize(key.first, key.second, v));
  for (const auto& [label, v] : by_label) r.overall.push_back(summarize("all", label, v));
  r.points = std::move(points);
  return r;
}

void write_calibration(const CalibrationReport& r, const fs::path& out_dir) {
  write_text_file(out_dir / "calibration.tsv",
                  fmt::format("n\tpoint_biserial\tauc\n{}\t{:.6f}\t{:.6f}\n", r.points.size(), r.stats.point_biserial,
                              r.stats.auc));
  std::string pts = "task_id\tcategory_id\tlabel\tscore\n";
  for (const auto& p : r.points) pts += fmt::format("{}\t{}\t{}\t{:.6f}\n", p.task_id, p.category_id, p.label, p.score);
  write_text_file(out_dir / "calibration_points.tsv", pts);
  std::string groups = "category_id\tlabel\tn\tmean\tstd\n";
  for (const auto* list : {&r.groups, &r.overall}) {
    for (const auto& g : *list) groups += fmt::format("{}\t{}\t{}\t{:.6f}\t{:.6f}\n", g.category_id, g.label, g.n, g.mean, g.stddev);
  }
  write_text_file(out_dir / "calibration_groups.tsv", groups);
}

}  // namespace skillevo
