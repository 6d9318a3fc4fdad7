#include "moa/accounting.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "moa/error.hpp"

namespace moa {

std::string Money::to_string() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%06lld", static_cast<long long>(micros_ / 1000000),
                static_cast<long long>(micros_ % 1000000));
  return buf;
}

Money record_cost(std::int64_t prompt_tokens, std::int64_t completion_tokens, double price_in,
                  double price_out) {
  if (prompt_tokens < 0 || completion_tokens < 0 || !(price_in >= 0.0) || !(price_out >= 0.0)) {
    throw Error(Errc::invalid_argument, "token counts and prices must be non-negative");
  }
  // price per 1e6 tokens in USD == price per token in micro-USD.
  const double micros = static_cast<double>(prompt_tokens) * price_in +
                        static_cast<double>(completion_tokens) * price_out;
  return Money::from_micros(std::llround(micros));
}

Money record_cost(const ModelSpec& model, std::int64_t prompt_tokens,
                  std::int64_t completion_tokens) {
  if (!model.price_in || !model.price_out) {
    throw Error(Errc::missing_price, "model '" + model.id + "' has no price configured", model.id);
  }
  return record_cost(prompt_tokens, completion_tokens, *model.price_in, *model.price_out);
}

double record_tflops(double active_params, std::int64_t prompt_tokens,
                     std::int64_t completion_tokens) {
  if (!(active_params > 0.0) || !std::isfinite(active_params)) {
    throw Error(Errc::missing_params, "active_params must be a positive number");
  }
  return 2.0 * active_params * static_cast<double>(prompt_tokens + completion_tokens) / 1e12;
}

ActiveParamsLookup active_params_from(const Config& config) {
  return [&config](std::string_view model) -> std::optional<double> {
    for (const auto& m : config.models) {
      if (m.id == model) return m.active_params;
    }
    return std::nullopt;
  };
}

double pipeline_tflops(const PipelineResult& result, const ActiveParamsLookup& params) {
  double total = 0.0;
  for (const auto& layer : result.layers) {
    double widest = 0.0;
    for (const auto& r : layer.records) {
      const auto active = params(r.model);
      if (!active) {
        throw Error(Errc::missing_params, "model '" + r.model + "' has no active_params", r.model);
      }
      widest = std::max(widest, record_tflops(*active, r.prompt_tokens, r.completion_tokens));
    }
    total += widest;
  }
  return total;
}

void UsageSummary::add(const GenerationRecord& record) {
  if (record.cost) {
    total_cost += *record.cost;
  } else {
    cost_complete = false;
  }
  for (TokenTotals* t : {&totals, &per_layer[record.layer_index], &per_model[record.model]}) {
    t->prompt += record.prompt_tokens;
    t->completion += record.completion_tokens;
    ++t->calls;
  }
}

void UsageSummary::add(const PipelineResult& result) {
  for (const auto& layer : result.layers) {
    for (const auto& r : layer.records) add(r);
  }
}

UsageSummary summarize_usage(const std::vector<GenerationRecord>& records) {
  UsageSummary s;
  for (const auto& r : records) s.add(r);
  return s;
}

UsageSummary summarize_usage(const PipelineResult& result) {
  UsageSummary s;
  s.add(result);
  return s;
}

bool dominates(const ParetoPoint& a, const ParetoPoint& b) noexcept {
  return a.expense <= b.expense && a.quality >= b.quality &&
         (a.expense < b.expense || a.quality > b.quality);
}

std::vector<ParetoPoint> pareto_front(const std::vector<ParetoPoint>& points) {
  for (const auto& p : points) {
    if (!std::isfinite(p.expense) || p.expense < 0.0 || !std::isfinite(p.quality)) {
      throw Error(Errc::invalid_argument, "pareto point '" + p.label + "' has invalid coordinates",
                  p.label);
    }
  }
  std::vector<std::size_t> idx(points.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return points[a].expense < points[b].expense;
  });

  // Sweep groups of equal expense. A group's best points survive iff they beat
  // every cheaper point's quality; ties inside the group on both axes all
  // survive.
  std::vector<ParetoPoint> front;
  double best_cheaper = -std::numeric_limits<double>::infinity();
  for (std::size_t g = 0; g < idx.size();) {
    std::size_t end = g;
    double group_best = -std::numeric_limits<double>::infinity();
    while (end < idx.size() && points[idx[end]].expense == points[idx[g]].expense) {
      group_best = std::max(group_best, points[idx[end]].quality);
      ++end;
    }
    if (group_best > best_cheaper) {
      for (std::size_t k = g; k < end; ++k) {
        if (points[idx[k]].quality == group_best) front.push_back(points[idx[k]]);
      }
      best_cheaper = group_best;
    }
    g = end;
  }
  return front;
}

}  // namespace moa
