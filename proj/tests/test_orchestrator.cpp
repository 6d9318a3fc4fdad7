#include <chrono>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "moa/error.hpp"
#include "moa/orchestrator.hpp"
#include "test_support.hpp"
#include "topology.hpp"

namespace moa {
namespace {

using namespace std::chrono_literals;
using testing::MockRig;
using testing::mock_config;

LayerSpec layer_of(std::vector<std::string> agents) { return {.agents = std::move(agents), .params = {}}; }

PipelineSpec pipeline_of(std::vector<std::vector<std::string>> layers) {
  PipelineSpec p{.id = "p"};
  for (auto& l : layers) p.layers.push_back(layer_of(std::move(l)));
  return p;
}

TEST(RunLayer, EchoKeepsAgentOrder) {
  MockRig rig(mock_config({"a", "b", "c"}), testing::echo_script());
  const auto out = run_layer(*rig.client, layer_of({"a", "b", "c"}), 1, {{Role::user, "x"}});
  ASSERT_EQ(out.records.size(), 3u);
  for (int j = 0; j < 3; ++j) {
    EXPECT_EQ(out.records[j].content, "x");
    EXPECT_EQ(out.records[j].agent_index, j + 1);
    EXPECT_EQ(out.records[j].layer_index, 1);
  }
  EXPECT_EQ(out.records[1].model, "b");
  EXPECT_TRUE(out.dropped_agents.empty());
}

TEST(RunLayer, AgentsRunConcurrently) {
  MockRig rig(mock_config({"a", "b", "c", "d", "e", "f"}), testing::template_script(100ms));
  const auto t0 = std::chrono::steady_clock::now();
  run_layer(*rig.client, layer_of({"a", "b", "c", "d", "e", "f"}), 1, {{Role::user, "x"}});
  EXPECT_LT(std::chrono::steady_clock::now() - t0, 300ms);
  EXPECT_EQ(rig.mock->peak_in_flight("mock"), 6);
}

TEST(RunLayer, FailureNamesAgent) {
  MockScript script = testing::template_script();
  script.faults.push_back({.model = "b", .status = 500, .times = -1});
  MockRig rig(mock_config({"a", "b", "c"}, 64, 0), script);
  std::vector<int> seen;
  ExecutionOptions options;
  options.on_record = [&](const GenerationRecord& r) { seen.push_back(r.agent_index); };
  try {
    run_layer(*rig.client, layer_of({"a", "b", "c"}), 2, {{Role::user, "x"}}, options);
    FAIL();
  } catch (const AgentFailure& e) {
    EXPECT_EQ(e.code(), Errc::agent_failure);
    EXPECT_EQ(e.model(), "b");
    EXPECT_EQ(e.agent_index(), 2);
    EXPECT_EQ(e.layer_index(), 2);
    EXPECT_EQ(e.cause(), Errc::exhausted_retries);
  }
  EXPECT_EQ(seen, (std::vector<int>{1, 3}));
}

TEST(RunPipeline, DegradedModeDropsFailedAgents) {
  MockScript script = testing::template_script();
  script.faults.push_back({.model = "b", .status = 500, .times = -1});
  MockRig rig(mock_config({"a", "b", "c"}, 64, 0), script);
  EXPECT_THROW(run_pipeline(*rig.client, pipeline_of({{"a", "b", "c"}, {"a"}}), "q"), AgentFailure);

  ExecutionOptions options;
  options.degraded_mode = true;
  const auto result = run_pipeline(*rig.client, pipeline_of({{"a", "b", "c"}, {"a"}}), "q", options);
  EXPECT_TRUE(result.degraded);
  EXPECT_EQ(result.layers[0].dropped_agents, std::vector<int>{2});
  ASSERT_EQ(result.layers[0].records.size(), 2u);
  const auto& agg = result.layers[1].records[0].messages[0].content;
  EXPECT_NE(agg.find("\n1. " + result.layers[0].records[0].content + "\n2. " +
                     result.layers[0].records[1].content),
            std::string::npos);
  EXPECT_EQ(agg.find("\n3. "), std::string::npos);
}

TEST(RunPipeline, DegradedModeStillFailsWhenLayerIsEmpty) {
  MockScript script;
  script.faults.push_back({.model = "a", .status = 500, .times = -1});
  MockRig rig(mock_config({"a"}, 64, 0), script);
  ExecutionOptions options;
  options.degraded_mode = true;
  EXPECT_THROW(run_pipeline(*rig.client, pipeline_of({{"a"}}), "q", options), AgentFailure);
}

TEST(RunPipeline, SingleAgentSingleLayer) {
  MockRig rig(mock_config({"a"}), testing::echo_script());
  const auto r = run_pipeline(*rig.client, pipeline_of({{"a"}}), "just answer");
  EXPECT_EQ(r.final, "just answer");
  EXPECT_EQ(rig.mock->calls(), 1u);
  EXPECT_EQ(rig.mock->log()[0].messages, (std::vector<ChatMessage>{{Role::user, "just answer"}}));
  EXPECT_FALSE(r.degraded);
}

void expect_waves(const std::string& pipeline, std::vector<std::size_t> widths) {
  MockRig rig(builtin_config(), testing::template_script(10ms));
  const auto result = run_pipeline(*rig.client, rig.config->pipeline(pipeline), "Explain tides.");
  const auto log = rig.mock->log();
  const auto topo = testing::reconstruct(log);
  EXPECT_EQ(log.size(), calls_per_input(rig.config->pipeline(pipeline)));
  EXPECT_EQ(topo.widths, widths);
  EXPECT_TRUE(topo.sequential);
  EXPECT_EQ(result.final, result.layers.back().records[0].content);
}

TEST(Topology, MoaIsThirteenCallsInThreeWaves) { expect_waves("moa", {6, 6, 1}); }
TEST(Topology, MoaLiteIsSevenCallsInTwoWaves) { expect_waves("moa-lite", {6, 1}); }

TEST(Topology, PipelineWallTimeBeatsSequential) {
  MockRig rig(builtin_config(), testing::template_script(100ms));
  const auto t0 = std::chrono::steady_clock::now();
  run_pipeline(*rig.client, rig.config->pipeline("moa"), "q");
  const auto elapsed = std::chrono::steady_clock::now() - t0;
  EXPECT_LT(elapsed, 1300ms / 2);
}

void check_prompt_integrity(const PipelineSpec& pipeline, const PipelineResult& result) {
  for (std::size_t i = 0; i < result.layers.size(); ++i) {
    for (const auto& rec : result.layers[i].records) {
      if (i == 0) {
        ASSERT_EQ(rec.messages, (std::vector<ChatMessage>{{Role::user, result.instruction}}));
        continue;
      }
      ASSERT_EQ(rec.messages.size(), 2u);
      EXPECT_EQ(rec.messages[0].content,
                render_aggregation_block(pipeline.aggregate_template, result.contents(i - 1)));
      EXPECT_EQ(rec.messages[1], (ChatMessage{Role::user, result.instruction}));
    }
  }
}

TEST(RunPipeline, PromptIntegrityOnRandomShapes) {
  const std::vector<std::string> models{"a", "b", "c", "d"};
  MockRig rig(mock_config(models), testing::template_script());
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<std::vector<std::string>> shape;
    const int n_layers = 1 + static_cast<int>(rng() % 4);
    for (int l = 0; l < n_layers; ++l) {
      const int width = l + 1 == n_layers ? 1 : 1 + static_cast<int>(rng() % 5);
      std::vector<std::string> agents;
      for (int a = 0; a < width; ++a) agents.push_back(models[rng() % models.size()]);
      shape.push_back(agents);
    }
    const auto p = pipeline_of(shape);
    rig.mock->reset();
    const auto result = run_pipeline(*rig.client, p, "instruction #" + std::to_string(trial));
    check_prompt_integrity(p, result);
    EXPECT_EQ(rig.mock->calls(), calls_per_input(p));
  }
}

TEST(RunPipeline, DeterministicUnderFrozenClock) {
  auto once = [] {
    MockRig rig(builtin_config(), testing::template_script(), testing::frozen_clock());
    return nlohmann::json(run_pipeline(*rig.client, rig.config->pipeline("moa"), "q")).dump();
  };
  EXPECT_EQ(once(), once());
}

TEST(RunPipeline, RecordsCarryCost) {
  MockRig rig(builtin_config(), testing::echo_script());
  const auto r = run_pipeline(*rig.client, rig.config->pipeline("moa-lite"), "one two");
  for (const auto& layer : r.layers) {
    for (const auto& rec : layer.records) EXPECT_TRUE(rec.cost.has_value());
  }
}

TEST(Seeds, DerivedPerAgent) {
  GenerationParams p;
  EXPECT_FALSE(derive_seed(p, 1).has_value());
  p.seed = 1000;
  EXPECT_EQ(derive_seed(p, 1), 1001);
  EXPECT_EQ(derive_seed(p, 6), 1006);
}

TEST(Seeds, SingleProposerSamplesDiffer) {
  MockRig rig(mock_config({"a"}), testing::template_script());
  LayerSpec layer = layer_of({"a", "a", "a"});
  layer.params.seed = 1000;
  const auto out = run_layer(*rig.client, layer, 1, {{Role::user, "q"}});
  EXPECT_EQ(out.records[0].params.seed, 1001);
  EXPECT_EQ(out.records[2].params.seed, 1003);
  EXPECT_NE(out.records[0].content, out.records[1].content);
  EXPECT_NE(out.records[1].content, out.records[2].content);
  std::vector<std::int64_t> sent;
  for (const auto& c : rig.mock->log()) sent.push_back(*c.params.seed);
  std::sort(sent.begin(), sent.end());
  EXPECT_EQ(sent, (std::vector<std::int64_t>{1001, 1002, 1003}));
}

TEST(Expressibility, CollaborativenessConfig) {
  const Config c = load_config(testing::source_path("configs/collaborativeness.json"));
  MockRig rig(c, testing::template_script());
  const auto collab = run_pipeline(*rig.client, c.pipeline("collab-qwen1.5-110b-chat"), "q");
  EXPECT_EQ(rig.mock->calls(), 7u);
  EXPECT_EQ(collab.layers[1].records[0].model, "qwen1.5-110b-chat");
  rig.mock->reset();
  run_pipeline(*rig.client, c.pipeline("solo-qwen1.5-110b-chat"), "q");
  EXPECT_EQ(rig.mock->calls(), 1u);
}

TEST(Serialization, PipelineResultRoundTrip) {
  MockRig rig(builtin_config(), testing::template_script(), testing::frozen_clock());
  const auto r = run_pipeline(*rig.client, rig.config->pipeline("moa-lite"), "q");
  const nlohmann::json j = r;
  EXPECT_EQ(j.get<PipelineResult>(), r);
}

}  // namespace
}  // namespace moa
