#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "moa/config.hpp"
#include "moa/money.hpp"
#include "moa/orchestrator.hpp"

namespace moa {

/// prompt_tokens * price_in / 1e6 + completion_tokens * price_out / 1e6 USD,
/// rounded once to the nearest micro-USD. Prices are USD per million tokens.
Money record_cost(std::int64_t prompt_tokens, std::int64_t completion_tokens, double price_in,
                  double price_out);
/// Throws Error(missing_price) naming the model when a price is absent.
Money record_cost(const ModelSpec& model, std::int64_t prompt_tokens,
                  std::int64_t completion_tokens);

/// Forward-pass estimate 2 * active_params * tokens, in tera-FLOPs.
double record_tflops(double active_params, std::int64_t prompt_tokens,
                     std::int64_t completion_tokens);

using ActiveParamsLookup = std::function<std::optional<double>(std::string_view model)>;
ActiveParamsLookup active_params_from(const Config& config);

/// Sum over layers of the largest per-agent tflops in that layer. Throws
/// Error(missing_params) naming the first model without active_params.
double pipeline_tflops(const PipelineResult& result, const ActiveParamsLookup& params);

struct TokenTotals {
  std::int64_t prompt = 0;
  std::int64_t completion = 0;
  std::int64_t calls = 0;

  std::int64_t total() const noexcept { return prompt + completion; }
  friend bool operator==(const TokenTotals&, const TokenTotals&) = default;
};

struct UsageSummary {
  Money total_cost;
  bool cost_complete = true;  // false if some record had no cost
  TokenTotals totals;
  std::map<int, TokenTotals> per_layer;
  std::map<std::string, TokenTotals> per_model;

  void add(const GenerationRecord& record);
  void add(const PipelineResult& result);
};

UsageSummary summarize_usage(const std::vector<GenerationRecord>& records);
UsageSummary summarize_usage(const PipelineResult& result);

struct ParetoPoint {
  std::string label;
  double expense = 0.0;  // USD or tflops
  double quality = 0.0;  // e.g. LC win rate in percent

  friend bool operator==(const ParetoPoint&, const ParetoPoint&) = default;
};

/// a dominates b: a.expense <= b.expense and a.quality >= b.quality with at
/// least one strict.
bool dominates(const ParetoPoint& a, const ParetoPoint& b) noexcept;

/// Points not dominated by any other, sorted by expense ascending (input
/// order among equal expense). Throws Error(invalid_argument) on a negative or
/// non-finite expense or a non-finite quality.
std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points);

}  // namespace moa
