#include <algorithm>
#include <numeric>
#include <regex>
#include <set>

#include <gtest/gtest.h>

#include "moa/error.hpp"
#include "moa/orchestrator.hpp"
#include "test_support.hpp"

namespace moa {
namespace {

/// Reads the ranker prompt and answers with the identifier attached to the
/// output that starts with "BEST".
class ScriptedRanker : public Backend {
 public:
  BackendReply send(const EndpointSpec&, const ModelSpec&, const ChatRequest& request) override {
    static const std::regex pick(R"re("model_identifier": "(m\d+)",\s*"output": """BEST)re");
    std::smatch m;
    const std::string& prompt = request.messages.back().content;
    if (!std::regex_search(prompt, m, pick)) return {"none", 1, 1};
    return {"  " + m[1].str() + "\n", 1, 1};
  }
};

TEST(Ranker, Identifiers) {
  EXPECT_EQ(ranker_identifier(0), "m1");
  EXPECT_EQ(ranker_identifier(9), "m10");
}

TEST(Ranker, PresentationOrderIsSeededPermutation) {
  for (std::size_t n : {1u, 2u, 6u, 17u}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto order = presentation_order(n, seed);
      EXPECT_EQ(order, presentation_order(n, seed));
      std::sort(order.begin(), order.end());
      std::vector<std::size_t> iota(n);
      std::iota(iota.begin(), iota.end(), 0);
      EXPECT_EQ(order, iota);
    }
  }
  std::set<std::vector<std::size_t>> distinct;
  for (std::uint64_t seed = 0; seed < 200; ++seed) distinct.insert(presentation_order(6, seed));
  EXPECT_GT(distinct.size(), 100u);
}

TEST(Ranker, AllPermutationsOfSixCandidates) {
  auto config = std::make_shared<const Config>(testing::mock_config({"judge"}));
  ModelClient client(config, std::make_shared<ScriptedRanker>());
  std::vector<std::string> base{"BEST answer", "weak 1", "weak 2", "weak 3", "weak 4", "weak 5"};
  std::sort(base.begin(), base.end());
  std::uint64_t seed = 0;
  int checked = 0;
  do {
    const std::size_t best = static_cast<std::size_t>(
        std::find(base.begin(), base.end(), "BEST answer") - base.begin());
    const auto outcome = rank_and_select(client, "judge", "Pick one", base, seed++);
    ASSERT_EQ(outcome.winner_index, best);
    ASSERT_EQ(base[outcome.winner_index], "BEST answer");
    ASSERT_EQ(outcome.raw_choice, "  " + ranker_identifier(static_cast<std::size_t>(
                                             std::find(outcome.order.begin(), outcome.order.end(), best) -
                                             outcome.order.begin())) + "\n");
    ASSERT_EQ(outcome.order, presentation_order(6, seed - 1));
    ++checked;
  } while (std::next_permutation(base.begin(), base.end()));
  EXPECT_EQ(checked, 720);
}

void expect_unparseable(const std::string& reply) {
  MockScript script;
  script.mode = MockMode::table;
  script.entries[{"judge", "*"}] = reply;
  testing::MockRig rig(testing::mock_config({"judge"}), script);
  try {
    rank_and_select(*rig.client, "judge", "q", {"a", "b", "c", "d", "e", "f"}, 1);
    FAIL() << "accepted '" << reply << "'";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unparseable_choice) << reply;
  }
}

TEST(Ranker, MalformedRepliesRejected) {
  expect_unparseable("The best is m3");
  expect_unparseable("m7");
  expect_unparseable("M3");
  expect_unparseable("\"m3\"");
  expect_unparseable("m3.");
  expect_unparseable("m 3");
  expect_unparseable("");
}

TEST(Ranker, ReplyMapsThroughPresentationOrder) {
  MockScript script;
  script.mode = MockMode::table;
  script.entries[{"judge", "*"}] = "m3\n";
  testing::MockRig rig(testing::mock_config({"judge"}), script);
  const std::vector<std::string> cands{"a", "b", "c", "d"};
  const auto outcome = rank_and_select(*rig.client, "judge", "q", cands, 77);
  EXPECT_EQ(outcome.winner_index, presentation_order(4, 77)[2]);
  EXPECT_EQ(outcome.record.model, "judge");
  const auto log = rig.mock->log();
  const auto& prompt = log[0].messages[0].content;
  EXPECT_NE(prompt.find("\"model_identifier\": \"m3\",\n        \"output\": \"\"\"" +
                        cands[outcome.winner_index] + "\"\"\""),
            std::string::npos);
}

TEST(Ranker, NeedsTwoCandidates) {
  testing::MockRig rig(testing::mock_config({"judge"}), testing::echo_script());
  EXPECT_THROW(rank_and_select(*rig.client, "judge", "q", {"only"}, 1), Error);
  EXPECT_EQ(rig.mock->calls(), 0u);
}

}  // namespace
}  // namespace moa
