#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "moa/accounting.hpp"

namespace moa {

/// Cost and compute of one finished run, averaged per done instance.
struct RunCostSummary {
  std::string label;  // pipeline id
  std::size_t instances = 0;
  UsageSummary usage;
  std::optional<double> avg_cost_usd;
  std::optional<double> avg_tflops;
};

RunCostSummary summarize_run(const std::filesystem::path& run_dir);

enum class FrontAxis { usd, tflops };

struct ReportRow {
  std::string label;
  std::optional<double> expense_usd;
  std::optional<double> expense_tflops;
  double quality = 0.0;
  bool on_front = false;
};

/// Joins run summaries with external quality scores (label -> score) and
/// marks the Pareto front on `axis`. Rows lacking that axis are never on it.
std::vector<ReportRow> build_report(const std::vector<RunCostSummary>& runs,
                                    const std::map<std::string, double>& scores,
                                    FrontAxis axis = FrontAxis::usd);

/// `label,expense_usd,expense_tflops,quality,on_front`
std::string render_report_csv(const std::vector<ReportRow>& rows);

/// Scores file: JSON object {label: quality} or list of {label, quality}.
std::map<std::string, double> load_scores(const std::filesystem::path& path);

}  // namespace moa
