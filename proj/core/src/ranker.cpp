#include <random>

#include "moa/accounting.hpp"
#include "moa/error.hpp"
#include "moa/orchestrator.hpp"

namespace moa {

std::string ranker_identifier(std::size_t slot) { return "m" + std::to_string(slot + 1); }

std::vector<std::size_t> presentation_order(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  // Hand-rolled so the permutation is identical across standard libraries;
  // std::shuffle's algorithm is implementation-defined.
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

namespace {

std::string_view trim(std::string_view s) {
  constexpr std::string_view kSpace = " \t\r\n\v\f";
  const auto first = s.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(kSpace);
  return s.substr(first, last - first + 1);
}

}  // namespace

RankOutcome rank_and_select(ModelClient& client, std::string_view ranker_model,
                            std::string_view instruction, const std::vector<std::string>& candidates,
                            std::uint64_t rng_seed, const GenerationParams& params,
                            const RankerTemplate& tmpl) {
  if (candidates.size() < 2) {
    throw Error(Errc::invalid_argument, "ranking needs at least two candidates", "candidates");
  }
  RankOutcome outcome;
  outcome.order = presentation_order(candidates.size(), rng_seed);

  std::vector<std::pair<std::string, std::string>> shown;
  shown.reserve(candidates.size());
  for (std::size_t slot = 0; slot < outcome.order.size(); ++slot) {
    shown.emplace_back(ranker_identifier(slot), candidates[outcome.order[slot]]);
  }

  GenerationRecord& record = outcome.record;
  record.model = std::string(ranker_model);
  record.messages = assemble_ranker_messages(tmpl, instruction, shown);
  record.params = params;
  const ChatResponse response = client.complete({record.model, record.messages, record.params});
  record.content = response.content;
  record.prompt_tokens = response.prompt_tokens;
  record.completion_tokens = response.completion_tokens;
  record.latency_ms = response.latency_ms;
  record.attempts = response.attempts;
  record.estimated_usage = response.estimated_usage;
  const ModelSpec& spec = client.config().model(record.model);
  if (spec.price_in && spec.price_out) record.cost = record_cost(spec, record.prompt_tokens, record.completion_tokens);

  outcome.raw_choice = response.content;
  const std::string_view choice = trim(response.content);
  for (std::size_t slot = 0; slot < shown.size(); ++slot) {
    if (shown[slot].first == choice) {
      outcome.winner_index = outcome.order[slot];
      return outcome;
    }
  }
  throw Error(Errc::unparseable_choice,
              "ranker reply is not a known model identifier: '" + response.content + "'",
              record.model);
}

}  // namespace moa
