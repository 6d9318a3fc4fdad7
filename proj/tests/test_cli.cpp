#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "moa/harness.hpp"
#include "test_support.hpp"

using nlohmann::json;

namespace moa {
namespace {

using testing::TempDir;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string src(const char* rel) { return testing::source_path(rel).string(); }

std::size_t line_count(const std::filesystem::path& path) {
  std::istringstream in(testing::read_text(path));
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

TEST(Cli, RunMoaLiteOnMock) {
  TempDir dir;
  testing::write_text(dir / "two.json", R"([{"instruction":"What is 2+2?"},{"instruction":"Name a color."}])");
  const auto r = cli({"run", "--pipeline", "moa-lite", "--dataset", (dir / "two.json").string(), "--out",
                      (dir / "run").string(), "--mock", src("configs/mock/template.json"), "--mock-log",
                      (dir / "log.jsonl").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json summary = json::parse(r.out);
  EXPECT_EQ(summary["model_calls"], 14);
  EXPECT_EQ(summary["done"], 2);
  EXPECT_EQ(line_count(dir / "log.jsonl"), 14u);

  const auto exported = cli({"export", "--run", (dir / "run").string()});
  ASSERT_EQ(exported.code, 0) << exported.err;
  EXPECT_TRUE(std::filesystem::exists(dir / "run/exports/alpacaeval_moa-lite.json"));

  // Resume is a no-op.
  const auto again = cli({"run", "--pipeline", "moa-lite", "--dataset", (dir / "two.json").string(), "--out",
                          (dir / "run").string(), "--mock", src("configs/mock/template.json")});
  EXPECT_EQ(json::parse(again.out)["model_calls"], 0);

  const auto report = cli({"report", "--run", (dir / "run").string(), "--scores", src("data/sample_scores.json")});
  ASSERT_EQ(report.code, 0) << report.err;
  EXPECT_EQ(report.out.rfind("label,expense_usd,expense_tflops,quality,on_front\nmoa-lite,", 0), 0u);
  EXPECT_NE(report.out.find(",59.3,true\n"), std::string::npos);
}

TEST(Cli, FlakyModelRetriesThenSucceeds) {
  TempDir dir;
  const auto r = cli({"run", "--pipeline", "moa-lite", "--dataset", src("data/sample_dataset.json"), "--out",
                      (dir / "run").string(), "--mock", src("configs/mock/flaky.json"), "--parallelism", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["model_calls"], 4 * 7 + 2);
}

TEST(Cli, Analyze) {
  TempDir dir;
  const auto r = cli({"analyze", "--study", src("data/sample_study.json"), "--metric", "bleu-4", "--out",
                      (dir / "rho.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json summary = json::parse(r.out);
  EXPECT_GT(summary["mean_rho"].get<double>(), 0.0);
  EXPECT_EQ(summary["tokenizer"], "alnum-lower-v1");
  EXPECT_EQ(testing::read_text(dir / "rho.csv").rfind("sample,metric,rho,n_valid\n", 0), 0u);

  const auto to_stdout = cli({"analyze", "--study", src("data/sample_study.json"), "--metric", "tfidf"});
  EXPECT_EQ(to_stdout.out.rfind("sample,metric,rho,n_valid\n", 0), 0u);
}

TEST(Cli, Rank) {
  TempDir dir;
  testing::write_text(dir / "ranker.json",
                      R"({"mode":"table","entries":[{"model":"qwen1.5-72b-chat","digest":"*","content":"m2"}]})");
  ASSERT_EQ(cli({"run", "--pipeline", "moa-lite", "--dataset", src("data/sample_dataset.json"), "--out",
                 (dir / "run").string(), "--mock", src("configs/mock/template.json")})
                .code,
            0);
  const auto r = cli({"rank", "--run", (dir / "run").string(), "--mock", (dir / "ranker.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const json summary = json::parse(r.out);
  EXPECT_EQ(summary["ranked"], 4);
  EXPECT_EQ(summary["model_calls"], 4);
}

TEST(Cli, Config) {
  EXPECT_EQ(cli({"config", "--check", src("configs/ablation_proposers.json")}).code, 0);
  const auto dump = cli({"config", "--dump-builtin"});
  ASSERT_EQ(dump.code, 0);
  EXPECT_EQ(parse_config(dump.out), builtin_config());

  TempDir dir;
  testing::write_text(dir / "bad.json", R"({"schema":1,"endpoints":[],"models":[],"pipelines":[{"id":"p","layers":[{"agents":["x"]}]}]})");
  const auto bad = cli({"config", "--check", (dir / "bad.json").string()});
  EXPECT_EQ(bad.code, 1);
  const json err = json::parse(bad.err);
  EXPECT_EQ(err["error"], "reference_error");
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({"run", "--bogus"}).code, 2);
  EXPECT_EQ(cli({"analyze", "--study", "/no/such/file.json"}).code, 2);
  EXPECT_EQ(cli({"--help"}).code, 0);
  const auto unknown = cli({"run", "--pipeline", "nope", "--dataset", src("data/sample_dataset.json"), "--out",
                            "/tmp/moa-never-created", "--mock", src("configs/mock/echo.json")});
  EXPECT_EQ(unknown.code, 1);
  EXPECT_NE(unknown.err.find("\"field\":\"nope\""), std::string::npos);
}

}  // namespace
}  // namespace moa
