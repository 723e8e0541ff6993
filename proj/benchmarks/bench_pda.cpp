#include <benchmark/benchmark.h>

#include <random>

#include "wmkit/keying.hpp"
#include "wmkit/pda.hpp"
#include "wmkit/permutation.hpp"

using namespace wmkit;

namespace {

TokenDistribution random_dist(std::size_t n) {
  std::mt19937_64 rng(3);
  std::exponential_distribution<double> e;
  std::vector<double> w(n);
  double total = 0;
  for (auto& x : w) total += x = e(rng);
  for (auto& x : w) x /= total;
  return TokenDistribution::from_probs(std::move(w));
}

}  // namespace

static void BM_ApplyBeta(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = random_dist(n);
  const auto perm = derive_permutation(sha256("bench"), n);
  for (auto _ : state) benchmark::DoNotOptimize(apply_beta(p, perm, 0.2));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ApplyBeta)->RangeMultiplier(10)->Range(10, 100000)->Complexity();

static void BM_ApplyRule(benchmark::State& state) {
  const auto rule = parse_rule(state.range(1) == 0 ? "gumbel" : state.range(1) == 1 ? "inverse" : "beta:0");
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto p = random_dist(n);
  const Digest root = sha256("bench");
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(apply_rule(rule, p, stream_block(root, i++)));
}
BENCHMARK(BM_ApplyRule)->ArgsProduct({{100, 32000}, {0, 1, 2}});
