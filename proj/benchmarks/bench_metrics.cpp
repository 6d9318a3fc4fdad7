#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "moa/accounting.hpp"
#include "moa/analysis.hpp"

namespace {

std::string words(std::mt19937_64& rng, int n) {
  static const char* vocab[] = {"model", "answer", "the", "response", "quality", "layer", "agent",
                                "prompt", "of", "and", "a", "token", "accurate", "helpful"};
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += vocab[rng() % std::size(vocab)];
  }
  return s;
}

void BM_Bleu4(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto a = words(rng, static_cast<int>(state.range(0)));
  const auto b = words(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(moa::bleu(a, b, 4));
}
BENCHMARK(BM_Bleu4)->Arg(50)->Arg(400);

void BM_TfIdf(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<std::string> corpus;
  for (int i = 0; i < 7; ++i) corpus.push_back(words(rng, static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(moa::tfidf_cosine(corpus[0], corpus[1], corpus));
}
BENCHMARK(BM_TfIdf)->Arg(50)->Arg(400);

void BM_Levenshtein(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto a = words(rng, static_cast<int>(state.range(0)));
  const auto b = words(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(moa::levenshtein_similarity(a, b));
}
BENCHMARK(BM_Levenshtein)->Arg(20)->Arg(200);

void BM_Spearman(benchmark::State& state) {
  std::mt19937_64 rng(4);
  std::vector<double> x, y;
  for (int i = 0; i < state.range(0); ++i) {
    x.push_back(static_cast<double>(rng() % 10));
    y.push_back(static_cast<double>(rng() % 10));
  }
  for (auto _ : state) benchmark::DoNotOptimize(moa::spearman(x, y));
}
BENCHMARK(BM_Spearman)->Arg(6)->Arg(1000);

void BM_ParetoFront(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::vector<moa::ParetoPoint> pts;
  for (int i = 0; i < state.range(0); ++i) {
    pts.push_back({"p", static_cast<double>(rng() % 100000), static_cast<double>(rng() % 100000)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(moa::pareto_front(pts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ParetoFront)->Range(64, 1 << 16)->Complexity();

}  // namespace
