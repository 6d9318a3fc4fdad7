#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "moa/client.hpp"
#include "moa/config.hpp"
#include "moa/money.hpp"
#include "moa/prompts.hpp"

namespace moa {

/// One model call made while executing a pipeline.
struct GenerationRecord {
  std::string model;
  int layer_index = 0;  // 1-based
  int agent_index = 0;  // 1-based position in the layer
  std::vector<ChatMessage> messages;
  GenerationParams params;  // as sent, including the derived seed
  std::string content;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  double latency_ms = 0.0;
  int attempts = 1;
  std::optional<Money> cost;  // present iff the model has both prices
  bool estimated_usage = false;

  friend bool operator==(const GenerationRecord&, const GenerationRecord&) = default;
};

struct LayerOutput {
  int layer_index = 0;
  std::vector<GenerationRecord> records;  // LayerSpec order
  std::vector<int> dropped_agents;        // degraded mode only

  friend bool operator==(const LayerOutput&, const LayerOutput&) = default;
};

struct PipelineResult {
  std::string pipeline;
  std::string instruction;
  std::vector<LayerOutput> layers;
  std::string final;
  bool degraded = false;

  /// Contents of one layer's records, in order.
  std::vector<std::string> contents(std::size_t layer_position) const;

  friend bool operator==(const PipelineResult&, const PipelineResult&) = default;
};

struct ExecutionOptions {
  /// Drop failed agents instead of failing the layer, as long as one
  /// agent succeeded. The result is marked degraded.
  bool degraded_mode = false;
  /// Called once per successful call, in agent order when its layer joins
  /// (including successful calls of a layer that then fails).
  std::function<void(const GenerationRecord&)> on_record;
};

/// Issues every agent of `layer` concurrently with the same `messages`.
/// Throws AgentFailure for the lowest-indexed failing agent.
LayerOutput run_layer(ModelClient& client, const LayerSpec& layer, int layer_index,
                      const std::vector<ChatMessage>& messages,
                      const ExecutionOptions& options = {});

/// Layer 1 sees the instruction alone; every later layer sees the
/// aggregation of the previous layer's outputs plus the instruction. The
/// final output is the sole record of the last layer.
PipelineResult run_pipeline(ModelClient& client, const PipelineSpec& pipeline,
                            std::string_view instruction, const ExecutionOptions& options = {});

/// Seed sent to agent `agent_index` of a layer: base + agent_index.
std::optional<std::int64_t> derive_seed(const GenerationParams& params, int agent_index);

// --- LLM ranker baseline -------------------------------------------------

/// Identifier shown for presentation slot `slot` (0-based): "m1", "m2", ...
std::string ranker_identifier(std::size_t slot);

/// Seeded Fisher-Yates permutation; element k is the candidate index shown
/// in slot k. Depends only on (n, seed).
std::vector<std::size_t> presentation_order(std::size_t n, std::uint64_t seed);

struct RankOutcome {
  std::size_t winner_index = 0;  // index into the caller's candidate list
  std::string raw_choice;
  std::vector<std::size_t> order;
  GenerationRecord record;
};

/// Asks `ranker_model` to pick the best candidate. The reply, trimmed of
/// whitespace, must equal one identifier exactly, else
/// Error(unparseable_choice).
RankOutcome rank_and_select(ModelClient& client, std::string_view ranker_model,
                            std::string_view instruction, const std::vector<std::string>& candidates,
                            std::uint64_t rng_seed, const GenerationParams& params = {},
                            const RankerTemplate& tmpl = RankerTemplate::standard());

void to_json(nlohmann::json& j, const GenerationRecord& r);
void from_json(const nlohmann::json& j, GenerationRecord& r);
void to_json(nlohmann::json& j, const LayerOutput& l);
void from_json(const nlohmann::json& j, LayerOutput& l);
void to_json(nlohmann::json& j, const PipelineResult& r);
void from_json(const nlohmann::json& j, PipelineResult& r);

}  // namespace moa
