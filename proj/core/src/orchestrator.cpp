#include "moa/orchestrator.hpp"

#include <future>

#include "moa/accounting.hpp"
#include "moa/error.hpp"

namespace moa {

std::vector<std::string> PipelineResult::contents(std::size_t layer_position) const {
  std::vector<std::string> out;
  for (const auto& r : layers.at(layer_position).records) out.push_back(r.content);
  return out;
}

std::optional<std::int64_t> derive_seed(const GenerationParams& params, int agent_index) {
  if (!params.seed) return std::nullopt;
  return *params.seed + agent_index;
}

namespace {

GenerationRecord call_agent(ModelClient& client, const std::string& model, int layer_index,
                            int agent_index, const std::vector<ChatMessage>& messages,
                            const GenerationParams& layer_params) {
  GenerationRecord record;
  record.model = model;
  record.layer_index = layer_index;
  record.agent_index = agent_index;
  record.messages = messages;
  record.params = layer_params;
  record.params.seed = derive_seed(layer_params, agent_index);

  const ChatResponse response = client.complete({model, messages, record.params});
  record.content = response.content;
  record.prompt_tokens = response.prompt_tokens;
  record.completion_tokens = response.completion_tokens;
  record.latency_ms = response.latency_ms;
  record.attempts = response.attempts;
  record.estimated_usage = response.estimated_usage;
  const ModelSpec& spec = client.config().model(model);
  if (spec.price_in && spec.price_out) {
    record.cost = record_cost(response.prompt_tokens, response.completion_tokens, *spec.price_in,
                              *spec.price_out);
  }
  return record;
}

}  // namespace

LayerOutput run_layer(ModelClient& client, const LayerSpec& layer, int layer_index,
                      const std::vector<ChatMessage>& messages, const ExecutionOptions& options) {
  std::vector<std::future<GenerationRecord>> pending;
  pending.reserve(layer.agents.size());
  for (std::size_t j = 0; j < layer.agents.size(); ++j) {
    pending.push_back(std::async(std::launch::async, call_agent, std::ref(client),
                                 std::cref(layer.agents[j]), layer_index, static_cast<int>(j + 1),
                                 std::cref(messages), std::cref(layer.params)));
  }

  LayerOutput output;
  output.layer_index = layer_index;
  std::optional<AgentFailure> first_failure;
  for (std::size_t j = 0; j < pending.size(); ++j) {
    const int agent_index = static_cast<int>(j + 1);
    try {
      output.records.push_back(pending[j].get());
    } catch (const Error& e) {
      if (!first_failure) first_failure.emplace(layer.agents[j], layer_index, agent_index, e.code(), e.what());
      output.dropped_agents.push_back(agent_index);
    } catch (const std::exception& e) {
      if (!first_failure) {
        first_failure.emplace(layer.agents[j], layer_index, agent_index, Errc::api_error, e.what());
      }
      output.dropped_agents.push_back(agent_index);
    }
  }

  if (options.on_record) {
    for (const auto& r : output.records) options.on_record(r);
  }
  if (first_failure && (!options.degraded_mode || output.records.empty())) throw *first_failure;
  return output;
}

PipelineResult run_pipeline(ModelClient& client, const PipelineSpec& pipeline,
                            std::string_view instruction, const ExecutionOptions& options) {
  PipelineResult result;
  result.pipeline = pipeline.id;
  result.instruction = std::string(instruction);

  std::vector<ChatMessage> messages{{Role::user, std::string(instruction)}};
  for (std::size_t i = 0; i < pipeline.layers.size(); ++i) {
    const int layer_index = static_cast<int>(i + 1);
    if (i > 0) {
      messages = assemble_aggregate_messages(pipeline.aggregate_template, instruction,
                                             result.contents(i - 1), pipeline.aggregate_placement);
    }
    LayerOutput output = run_layer(client, pipeline.layers[i], layer_index, messages, options);
    if (!output.dropped_agents.empty()) result.degraded = true;
    result.layers.push_back(std::move(output));
  }
  result.final = result.layers.back().records.front().content;
  return result;
}

void to_json(nlohmann::json& j, const GenerationRecord& r) {
  j = nlohmann::json{{"model", r.model},
                     {"layer_index", r.layer_index},
                     {"agent_index", r.agent_index},
                     {"messages", r.messages},
                     {"params", r.params},
                     {"content", r.content},
                     {"prompt_tokens", r.prompt_tokens},
                     {"completion_tokens", r.completion_tokens},
                     {"latency_ms", r.latency_ms},
                     {"attempts", r.attempts},
                     {"estimated_usage", r.estimated_usage}};
  if (r.cost) {
    j["cost_micros"] = r.cost->micros();
  } else {
    j["cost_micros"] = nullptr;
  }
}

void from_json(const nlohmann::json& j, GenerationRecord& r) {
  r.model = j.at("model").get<std::string>();
  r.layer_index = j.at("layer_index").get<int>();
  r.agent_index = j.at("agent_index").get<int>();
  r.messages = j.at("messages").get<std::vector<ChatMessage>>();
  r.params = j.at("params").get<GenerationParams>();
  r.content = j.at("content").get<std::string>();
  r.prompt_tokens = j.at("prompt_tokens").get<std::int64_t>();
  r.completion_tokens = j.at("completion_tokens").get<std::int64_t>();
  r.latency_ms = j.at("latency_ms").get<double>();
  r.attempts = j.at("attempts").get<int>();
  r.estimated_usage = j.at("estimated_usage").get<bool>();
  const auto& cost = j.at("cost_micros");
  r.cost = cost.is_null() ? std::nullopt
                          : std::optional<Money>(Money::from_micros(cost.get<std::int64_t>()));
}

void to_json(nlohmann::json& j, const LayerOutput& l) {
  j = nlohmann::json{{"layer_index", l.layer_index},
                     {"records", l.records},
                     {"dropped_agents", l.dropped_agents}};
}

void from_json(const nlohmann::json& j, LayerOutput& l) {
  l.layer_index = j.at("layer_index").get<int>();
  l.records = j.at("records").get<std::vector<GenerationRecord>>();
  l.dropped_agents = j.value("dropped_agents", std::vector<int>{});
}

void to_json(nlohmann::json& j, const PipelineResult& r) {
  j = nlohmann::json{{"pipeline", r.pipeline},
                     {"instruction", r.instruction},
                     {"layers", r.layers},
                     {"final", r.final},
                     {"degraded", r.degraded}};
}

void from_json(const nlohmann::json& j, PipelineResult& r) {
  r.pipeline = j.at("pipeline").get<std::string>();
  r.instruction = j.at("instruction").get<std::string>();
  r.layers = j.at("layers").get<std::vector<LayerOutput>>();
  r.final = j.at("final").get<std::string>();
  r.degraded = j.value("degraded", false);
}

}  // namespace moa
