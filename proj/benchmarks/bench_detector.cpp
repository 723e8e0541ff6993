#include <benchmark/benchmark.h>

#include <random>

#include "wmkit/detector.hpp"

using namespace wmkit;

static void BM_DetectBeta(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  std::vector<TokenId> tokens(200);
  for (auto& t : tokens) t = static_cast<TokenId>(rng() % n);
  const TokenSequence text(tokens, n);
  const BetaDetector detector(SecretKey::from_seed(9), n);
  for (auto _ : state) benchmark::DoNotOptimize(detector.detect(text, z_for_fpr(0.01)));
  state.SetItemsProcessed(state.iterations() * 199);
}
BENCHMARK(BM_DetectBeta)->Arg(100)->Arg(32000);
