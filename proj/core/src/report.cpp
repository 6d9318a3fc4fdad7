#include "moa/report.hpp"

#include <fstream>
#include <sstream>

#include "moa/error.hpp"
#include "moa/harness.hpp"

namespace moa {

RunCostSummary summarize_run(const std::filesystem::path& run_dir) {
  const RunManifest manifest = load_manifest(run_dir);
  const auto results = load_results(run_dir);
  const Config snapshot = load_config(RunPaths{run_dir}.config());
  const auto params = active_params_from(snapshot);

  RunCostSummary summary;
  summary.label = manifest.pipeline;
  double tflops = 0.0;
  bool tflops_complete = true;
  for (const auto& s : manifest.samples) {
    if (s.status != SampleStatus::done) continue;
    const PipelineResult& result = results.at(s.sample_id);
    summary.usage.add(result);
    ++summary.instances;
    if (tflops_complete) {
      try {
        tflops += pipeline_tflops(result, params);
      } catch (const Error& e) {
        if (e.code() != Errc::missing_params) throw;
        tflops_complete = false;
      }
    }
  }
  if (summary.instances > 0) {
    const double n = static_cast<double>(summary.instances);
    if (summary.usage.cost_complete) summary.avg_cost_usd = summary.usage.total_cost.usd() / n;
    if (tflops_complete) summary.avg_tflops = tflops / n;
  }
  return summary;
}

std::vector<ReportRow> build_report(const std::vector<RunCostSummary>& runs,
                                    const std::map<std::string, double>& scores, FrontAxis axis) {
  std::vector<ReportRow> rows;
  std::vector<ParetoPoint> points;
  for (const auto& run : runs) {
    const auto score = scores.find(run.label);
    if (score == scores.end()) {
      throw Error(Errc::reference, "scores file has no entry for '" + run.label + "'", run.label);
    }
    ReportRow row{run.label, run.avg_cost_usd, run.avg_tflops, score->second, false};
    const auto& expense = axis == FrontAxis::usd ? row.expense_usd : row.expense_tflops;
    if (expense) points.push_back({row.label, *expense, row.quality});
    rows.push_back(std::move(row));
  }
  const auto front = pareto_front(points);
  for (auto& row : rows) {
    const auto& expense = axis == FrontAxis::usd ? row.expense_usd : row.expense_tflops;
    if (!expense) continue;
    for (const auto& p : front) {
      if (p.label == row.label && p.expense == *expense && p.quality == row.quality) row.on_front = true;
    }
  }
  return rows;
}

std::string render_report_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out.precision(12);
  out << "label,expense_usd,expense_tflops,quality,on_front\n";
  for (const auto& r : rows) {
    out << r.label << ',';
    if (r.expense_usd) out << *r.expense_usd;
    out << ',';
    if (r.expense_tflops) out << *r.expense_tflops;
    out << ',' << r.quality << ',' << (r.on_front ? "true" : "false") << '\n';
  }
  return out.str();
}

std::map<std::string, double> load_scores(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open scores file " + path.string(), path.string());
  try {
    const auto j = nlohmann::json::parse(in);
    std::map<std::string, double> scores;
    if (j.is_object()) {
      for (const auto& [label, value] : j.items()) scores[label] = value.get<double>();
    } else if (j.is_array()) {
      for (const auto& rec : j) scores[rec.at("label").get<std::string>()] = rec.at("quality").get<double>();
    } else {
      throw Error(Errc::parse, "scores file must be an object or a list", path.string());
    }
    return scores;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse, "malformed scores file: " + std::string(e.what()), path.string());
  }
}

}  // namespace moa
