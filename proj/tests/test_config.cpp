#include <random>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "moa/config.hpp"
#include "moa/error.hpp"
#include "test_support.hpp"

using nlohmann::json;

namespace moa {
namespace {

json base_doc() {
  return json{{"schema", 1},
              {"endpoints", json::array({{{"id", "e"}, {"base_url", "http://x"}}})},
              {"models", json::array({{{"id", "a"}, {"endpoint", "e"}},
                                      {{"id", "b"}, {"endpoint", "e"}},
                                      {{"id", "c"}, {"endpoint", "e"}}})},
              {"pipelines", json::array()}};
}

json with_pipeline(json doc, json layers) {
  doc["pipelines"].push_back({{"id", "p"}, {"layers", std::move(layers)}});
  return doc;
}

json layer(std::initializer_list<const char*> agents) {
  json a = json::array();
  for (const char* s : agents) a.push_back(s);
  return {{"agents", a}};
}

Errc error_code_of(const json& doc) {
  try {
    config_from_json(doc);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::io;
}

TEST(Config, BuiltinMoaHasThreeLayersAndThirteenCalls) {
  const Config c = builtin_config();
  const auto& moa = c.pipeline("moa");
  ASSERT_EQ(moa.layers.size(), 3u);
  EXPECT_EQ(moa.layers[0].agents.size(), 6u);
  EXPECT_EQ(moa.layers[1].agents.size(), 6u);
  EXPECT_EQ(moa.layers[2].agents, std::vector<std::string>{"qwen1.5-110b-chat"});
  EXPECT_EQ(calls_per_input(moa), 13u);
}

TEST(Config, BuiltinMoaLiteHasTwoLayersAndSevenCalls) {
  const Config c = builtin_config();
  const auto& lite = c.pipeline("moa-lite");
  ASSERT_EQ(lite.layers.size(), 2u);
  EXPECT_EQ(lite.layers[1].agents, std::vector<std::string>{"qwen1.5-72b-chat"});
  EXPECT_EQ(calls_per_input(lite), 7u);
}

TEST(Config, BuiltinValidates) { EXPECT_NO_THROW(validate(builtin_config())); }

TEST(Config, ThreeLayerDocument) {
  const Config c = config_from_json(
      with_pipeline(base_doc(), json::array({layer({"a", "b", "c"}), layer({"a", "b", "c"}), layer({"a"})})));
  EXPECT_EQ(c.pipeline("p").layers.size(), 3u);
  EXPECT_EQ(calls_per_input(c.pipeline("p")), 7u);
}

TEST(Config, SingleLayerSingleAgentIsValid) {
  const Config c = config_from_json(with_pipeline(base_doc(), json::array({layer({"a"})})));
  EXPECT_EQ(calls_per_input(c.pipeline("p")), 1u);
}

TEST(Config, FinalLayerMustHaveOneAgent) {
  try {
    config_from_json(with_pipeline(base_doc(), json::array({layer({"a", "b"}), layer({"a", "b"})})));
    FAIL() << "expected invariant error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invariant);
    EXPECT_NE(std::string(e.what()).find("'p'"), std::string::npos);
    EXPECT_EQ(e.field(), "pipelines[p].layers[2].agents");
  }
}

TEST(Config, UnknownModelIsReferenceError) {
  try {
    config_from_json(with_pipeline(base_doc(), json::array({layer({"a", "ghost"}), layer({"a"})})));
    FAIL() << "expected reference error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::reference);
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
    EXPECT_EQ(e.field(), "pipelines[p].layers[1].agents[2]");
  }
}

TEST(Config, UnknownEndpointIsReferenceError) {
  json doc = base_doc();
  doc["models"][0]["endpoint"] = "nowhere";
  EXPECT_EQ(error_code_of(doc), Errc::reference);
}

TEST(Config, LookupsThrowReference) {
  const Config c = builtin_config();
  EXPECT_THROW(c.pipeline("nope"), Error);
  try {
    c.model("nope");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::reference);
    EXPECT_EQ(e.field(), "nope");
  }
  EXPECT_EQ(c.endpoint_of("gpt-4o").id, "openai");
}

TEST(Config, ParseErrors) {
  EXPECT_THROW(parse_config("{not json"), Error);
  try {
    parse_config("{not json");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::parse);
  }
  json doc = base_doc();
  doc.erase("schema");
  EXPECT_EQ(error_code_of(doc), Errc::parse);
  doc = base_doc();
  doc["schema"] = 2;
  EXPECT_EQ(error_code_of(doc), Errc::parse);
  doc = base_doc();
  doc["bogus"] = 1;
  EXPECT_EQ(error_code_of(doc), Errc::parse);
  doc = base_doc();
  doc["models"][0]["price"] = 1.0;
  EXPECT_EQ(error_code_of(doc), Errc::parse);
  doc = base_doc();
  doc["endpoints"][0]["max_concurrent"] = "eight";
  EXPECT_EQ(error_code_of(doc), Errc::parse);
  doc = base_doc();
  doc["endpoints"][0]["requests_per_minute"] = "lots";
  EXPECT_EQ(error_code_of(doc), Errc::parse);
  doc = with_pipeline(base_doc(), json::array({layer({"a"})}));
  doc["pipelines"][0]["aggregate_role"] = "assistant";
  EXPECT_EQ(error_code_of(doc), Errc::parse);
}

TEST(Config, InvariantViolations) {
  json doc = base_doc();
  doc["endpoints"][0]["max_concurrent"] = 0;
  EXPECT_EQ(error_code_of(doc), Errc::invariant);
  doc = base_doc();
  doc["endpoints"][0]["timeout"] = 0;
  EXPECT_EQ(error_code_of(doc), Errc::invariant);
  doc = base_doc();
  doc["models"][0]["price_in"] = -1;
  EXPECT_EQ(error_code_of(doc), Errc::invariant);
  doc = base_doc();
  doc["models"][0]["active_params"] = 0;
  EXPECT_EQ(error_code_of(doc), Errc::invariant);
  doc = base_doc();
  doc["models"][1]["id"] = "a";
  EXPECT_EQ(error_code_of(doc), Errc::invariant);
  doc = with_pipeline(base_doc(), json::array());
  EXPECT_EQ(error_code_of(doc), Errc::invariant);
  doc = with_pipeline(base_doc(), json::array({layer({})}));
  EXPECT_EQ(error_code_of(doc), Errc::invariant);

  json bad_temp = layer({"a"});
  bad_temp["params"] = {{"temperature", -0.1}};
  EXPECT_EQ(error_code_of(with_pipeline(base_doc(), json::array({bad_temp}))), Errc::invariant);
  json bad_tokens = layer({"a"});
  bad_tokens["params"] = {{"max_tokens", 0}};
  try {
    config_from_json(with_pipeline(base_doc(), json::array({bad_tokens})));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invariant);
    EXPECT_EQ(e.field(), "pipelines[p].layers[1].params.max_tokens");
  }
}

TEST(Config, DuplicateAgentsAllowed) {
  const Config c =
      config_from_json(with_pipeline(base_doc(), json::array({layer({"a", "a", "a"}), layer({"a"})})));
  EXPECT_EQ(calls_per_input(c.pipeline("p")), 4u);
}

TEST(Config, DefaultsApplied) {
  const Config c = config_from_json(with_pipeline(base_doc(), json::array({layer({"a"})})));
  EXPECT_EQ(c.endpoint("e").max_concurrent, 8);
  EXPECT_FALSE(c.endpoint("e").requests_per_minute.has_value());
  EXPECT_EQ(c.model("a").api_model_name, "a");
  EXPECT_DOUBLE_EQ(c.pipeline("p").layers[0].params.temperature, 0.7);
  EXPECT_EQ(c.pipeline("p").layers[0].params.max_tokens, 2048);
  EXPECT_EQ(c.pipeline("p").aggregate_template, AggregationTemplate::standard());
  EXPECT_EQ(c.pipeline("p").aggregate_placement, AggregatePlacement::system_message);
}

TEST(Config, BuiltinRoundTrips) {
  const Config c = builtin_config();
  const Config again = parse_config(serialize_config(c));
  EXPECT_EQ(c, again);
  EXPECT_EQ(serialize_config(again), serialize_config(c));
}

TEST(Config, ShippedConfigsValidateAndRoundTrip) {
  for (const char* name : {"configs/moa.json", "configs/collaborativeness.json",
                           "configs/ablation_proposers.json", "configs/role_swap.json"}) {
    SCOPED_TRACE(name);
    const Config c = load_config(testing::source_path(name));
    EXPECT_EQ(parse_config(serialize_config(c)), c);
  }
  EXPECT_EQ(load_config(testing::source_path("configs/moa.json")), builtin_config());
}

Config random_config(std::mt19937_64& rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  Config c;
  const int n_endpoints = pick(1, 3);
  for (int e = 0; e < n_endpoints; ++e) {
    EndpointSpec spec{.id = "e" + std::to_string(e), .base_url = "http://h" + std::to_string(e)};
    spec.max_concurrent = pick(1, 32);
    if (pick(0, 1)) spec.requests_per_minute = pick(1, 1000);
    spec.timeout_seconds = pick(1, 600) / 4.0;
    spec.max_retries = pick(0, 9);
    c.endpoints.push_back(spec);
  }
  const int n_models = pick(1, 6);
  for (int m = 0; m < n_models; ++m) {
    ModelSpec spec{.id = "m" + std::to_string(m), .endpoint = "e" + std::to_string(pick(0, n_endpoints - 1))};
    spec.api_model_name = "org/M-" + std::to_string(m);
    if (pick(0, 1)) spec.active_params = pick(1, 200) * 1e9;
    if (pick(0, 1)) spec.price_in = pick(0, 500) / 100.0;
    if (pick(0, 1)) spec.price_out = pick(0, 500) / 100.0;
    if (pick(0, 3) == 0) spec.notes = "note \"quoted\"\nline";
    c.models.push_back(spec);
  }
  const int n_pipes = pick(1, 3);
  for (int p = 0; p < n_pipes; ++p) {
    PipelineSpec spec{.id = "p" + std::to_string(p)};
    const int n_layers = pick(1, 4);
    for (int l = 0; l < n_layers; ++l) {
      LayerSpec layer;
      const int width = l + 1 == n_layers ? 1 : pick(1, 6);
      for (int a = 0; a < width; ++a) layer.agents.push_back("m" + std::to_string(pick(0, n_models - 1)));
      layer.params.temperature = pick(0, 20) / 10.0;
      layer.params.max_tokens = pick(1, 4096);
      if (pick(0, 1)) layer.params.seed = pick(0, 100000);
      spec.layers.push_back(layer);
    }
    if (pick(0, 1)) spec.aggregate_placement = AggregatePlacement::user_prefix;
    c.pipelines.push_back(spec);
  }
  return c;
}

TEST(ConfigProperty, RandomConfigsRoundTripAndCountCalls) {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 300; ++i) {
    const Config c = random_config(rng);
    ASSERT_NO_THROW(validate(c));
    const Config again = parse_config(serialize_config(c));
    ASSERT_EQ(again, c) << serialize_config(c);
    for (const auto& p : c.pipelines) {
      std::size_t sum = 0;
      for (const auto& l : p.layers) sum += l.agents.size();
      ASSERT_EQ(calls_per_input(p), sum);
    }
  }
}

TEST(ConfigProperty, ParsingIsTotalUnderMutation) {
  const std::string valid = serialize_config(builtin_config());
  std::mt19937_64 rng(99);
  int accepted = 0, rejected = 0;
  for (int i = 0; i < 1500; ++i) {
    std::string text = valid;
    const int edits = std::uniform_int_distribution<int>(1, 4)(rng);
    for (int k = 0; k < edits && !text.empty(); ++k) {
      const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, text.size() - 1)(rng);
      switch (rng() % 4) {
        case 0: text.erase(pos, 1); break;
        case 1: text[pos] = static_cast<char>(rng() % 256); break;
        case 2: text.insert(pos, 1, "{}[]\",:0-e"[rng() % 10]); break;
        default: text.resize(pos); break;
      }
    }
    try {
      parse_config(text);
      ++accepted;
    } catch (const Error&) {
      ++rejected;
    } catch (const std::exception& e) {
      FAIL() << "non-structured exception: " << e.what() << "\n" << text;
    }
  }
  EXPECT_GT(rejected, 0);
  EXPECT_EQ(accepted + rejected, 1500);
}

TEST(ConfigProperty, RandomBytesNeverCrash) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 500; ++i) {
    std::string text(rng() % 64, '\0');
    for (char& ch : text) ch = static_cast<char>(rng() % 256);
    EXPECT_THROW(parse_config(text), Error);
  }
}

}  // namespace
}  // namespace moa
