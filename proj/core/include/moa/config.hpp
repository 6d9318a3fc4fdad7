#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "moa/chat.hpp"
#include "moa/prompts.hpp"

namespace moa {

inline constexpr int kConfigSchemaVersion = 1;

struct EndpointSpec {
  std::string id;
  std::string base_url;
  std::string api_key_env;
  int max_concurrent = 8;
  std::optional<int> requests_per_minute;  // nullopt = unlimited
  double timeout_seconds = 120.0;
  int max_retries = 3;

  friend bool operator==(const EndpointSpec&, const EndpointSpec&) = default;
};

struct ModelSpec {
  std::string id;
  std::string endpoint;
  std::string api_model_name;
  std::optional<double> active_params;  // parameters active per token
  std::optional<double> price_in;       // USD per 1e6 prompt tokens
  std::optional<double> price_out;      // USD per 1e6 completion tokens
  std::string notes;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

struct LayerSpec {
  std::vector<std::string> agents;  // duplicates allowed (single-proposer)
  GenerationParams params;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct PipelineSpec {
  std::string id;
  std::vector<LayerSpec> layers;
  AggregationTemplate aggregate_template = AggregationTemplate::standard();
  AggregatePlacement aggregate_placement = AggregatePlacement::system_message;

  friend bool operator==(const PipelineSpec&, const PipelineSpec&) = default;
};

/// Model calls issued for one input: the sum of layer widths.
std::size_t calls_per_input(const PipelineSpec& pipeline) noexcept;

/// A fully validated config document. Immutable once built by
/// parse_config/load_config/builtin_config; safe to share across threads.
struct Config {
  std::vector<EndpointSpec> endpoints;
  std::vector<ModelSpec> models;
  std::vector<PipelineSpec> pipelines;

  // Lookups throw Error(reference) naming the id.
  const EndpointSpec& endpoint(std::string_view id) const;
  const ModelSpec& model(std::string_view id) const;
  const PipelineSpec& pipeline(std::string_view id) const;
  const EndpointSpec& endpoint_of(std::string_view model_id) const;

  friend bool operator==(const Config&, const Config&) = default;
};

/// Checks every invariant and cross-reference; throws the first violation.
void validate(const Config& config);

Config parse_config(std::string_view text);
Config config_from_json(const nlohmann::json& document);
Config load_config(const std::filesystem::path& path);

nlohmann::json to_json(const Config& config);
std::string serialize_config(const Config& config);

/// Shipped roster: the six open-source models, the "moa", "moa-lite" and
/// "moa-gpt4o" pipelines.
Config builtin_config();
std::vector<PipelineSpec> builtin_pipelines();

}  // namespace moa
