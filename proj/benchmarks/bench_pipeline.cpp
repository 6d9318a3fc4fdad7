#include <memory>

#include <benchmark/benchmark.h>

#include "moa/client.hpp"
#include "moa/config.hpp"
#include "moa/mock.hpp"
#include "moa/orchestrator.hpp"

namespace {

// Orchestration overhead of a full pipeline against a zero-latency mock.
void BM_MockPipeline(benchmark::State& state, const char* pipeline) {
  moa::Config unthrottled = moa::builtin_config();
  for (auto& e : unthrottled.endpoints) e.requests_per_minute.reset();
  auto config = std::make_shared<const moa::Config>(std::move(unthrottled));
  moa::MockScript script;
  script.mode = moa::MockMode::templated;
  auto mock = std::make_shared<moa::MockBackend>(script);
  moa::ModelClient client(config, mock);
  const auto& spec = config->pipeline(pipeline);
  for (auto _ : state) {
    benchmark::DoNotOptimize(moa::run_pipeline(client, spec, "Summarize the plot of Hamlet."));
    state.PauseTiming();
    mock->reset();
    state.ResumeTiming();
  }
  state.counters["calls"] = static_cast<double>(moa::calls_per_input(spec));
}
BENCHMARK_CAPTURE(BM_MockPipeline, moa, "moa")->Unit(benchmark::kMicrosecond);
BENCHMARK_CAPTURE(BM_MockPipeline, moa_lite, "moa-lite")->Unit(benchmark::kMicrosecond);

void BM_AggregationPrompt(benchmark::State& state) {
  const std::vector<std::string> responses(6, std::string(2000, 'x'));
  const auto tmpl = moa::AggregationTemplate::standard();
  for (auto _ : state) benchmark::DoNotOptimize(moa::assemble_aggregate_messages(tmpl, "q", responses));
}
BENCHMARK(BM_AggregationPrompt);

}  // namespace
