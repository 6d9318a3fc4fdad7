#include "moa/config.hpp"

namespace moa {
namespace {

// List prices (USD per 1e6 tokens) and parameter counts as published by the
// providers in mid-2024. Mixture-of-experts models list their activated size.
Config make_builtin() {
  Config c;
  c.endpoints.push_back({.id = "together",
                         .base_url = "https://api.together.xyz/v1",
                         .api_key_env = "TOGETHER_API_KEY",
                         .max_concurrent = 16,
                         .requests_per_minute = 600,
                         .timeout_seconds = 300.0,
                         .max_retries = 5});
  c.endpoints.push_back({.id = "openai",
                         .base_url = "https://api.openai.com/v1",
                         .api_key_env = "OPENAI_API_KEY",
                         .max_concurrent = 8,
                         .requests_per_minute = 500,
                         .timeout_seconds = 300.0,
                         .max_retries = 5});

  auto add = [&c](std::string id, std::string endpoint, std::string api_name,
                  std::optional<double> params, double price_in, double price_out,
                  std::string notes = {}) {
    c.models.push_back({std::move(id), std::move(endpoint), std::move(api_name), params, price_in,
                        price_out, std::move(notes)});
  };
  add("qwen1.5-110b-chat", "together", "Qwen/Qwen1.5-110B-Chat", 1.11e11, 1.80, 1.80);
  add("qwen1.5-72b-chat", "together", "Qwen/Qwen1.5-72B-Chat", 7.2e10, 0.90, 0.90);
  add("wizardlm-2-8x22b", "together", "microsoft/WizardLM-2-8x22B", 3.9e10, 1.20, 1.20,
      "MoE 8x22B, 2 experts active per token (~39B activated)");
  add("llama-3-70b-instruct", "together", "meta-llama/Llama-3-70b-chat-hf", 7.0e10, 0.90, 0.90);
  add("mixtral-8x22b-instruct", "together", "mistralai/Mixtral-8x22B-Instruct-v0.1", 3.9e10, 1.20,
      1.20, "MoE 8x22B, 2 experts active per token (~39B activated)");
  add("dbrx-instruct", "together", "databricks/dbrx-instruct", 3.6e10, 1.20, 1.20,
      "MoE 16 experts, 4 active per token (36B activated)");
  add("gpt-4o", "openai", "gpt-4o", std::nullopt, 5.00, 15.00,
      "parameter count undisclosed; tflops cannot be computed");

  const std::vector<std::string> proposers = {"qwen1.5-110b-chat",    "qwen1.5-72b-chat",
                                              "wizardlm-2-8x22b",     "llama-3-70b-instruct",
                                              "mixtral-8x22b-instruct", "dbrx-instruct"};
  const GenerationParams params{.temperature = 0.7, .max_tokens = 2048, .seed = std::nullopt};

  c.pipelines.push_back({.id = "moa",
                         .layers = {{proposers, params}, {proposers, params},
                                    {{"qwen1.5-110b-chat"}, params}}});
  c.pipelines.push_back({.id = "moa-lite",
                         .layers = {{proposers, params}, {{"qwen1.5-72b-chat"}, params}}});
  c.pipelines.push_back({.id = "moa-gpt4o",
                         .layers = {{proposers, params}, {proposers, params}, {{"gpt-4o"}, params}}});
  return c;
}

}  // namespace

Config builtin_config() {
  static const Config config = [] {
    Config c = make_builtin();
    validate(c);
    return c;
  }();
  return config;
}

std::vector<PipelineSpec> builtin_pipelines() { return builtin_config().pipelines; }

}  // namespace moa
