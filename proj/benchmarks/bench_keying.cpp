#include <benchmark/benchmark.h>

#include "wmkit/keying.hpp"
#include "wmkit/permutation.hpp"

using namespace wmkit;

static void BM_KeyDigest(benchmark::State& state) {
  const SecretKey sk = SecretKey::from_seed(1);
  const KeyHasher hasher(sk);
  std::vector<TokenId> ctx{5, 17, 2, 99, 3};
  for (auto _ : state) {
    ctx[0] = static_cast<TokenId>(state.iterations() % 100);
    benchmark::DoNotOptimize(hasher.ngram_digest(ctx));
  }
}
BENCHMARK(BM_KeyDigest);

static void BM_DerivePermutation(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t i = 0;
  const Digest root = sha256("bench");
  for (auto _ : state) benchmark::DoNotOptimize(derive_permutation(stream_block(root, i++), n));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DerivePermutation)->RangeMultiplier(10)->Range(10, 100000)->Complexity();

static void BM_DeriveRank(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::uint64_t i = 0;
  const Digest root = sha256("bench");
  for (auto _ : state) {
    benchmark::DoNotOptimize(derive_rank(stream_block(root, i), n, static_cast<TokenId>(i % n)));
    ++i;
  }
}
BENCHMARK(BM_DeriveRank)->Arg(100)->Arg(50000);

static void BM_UniformStream(benchmark::State& state) {
  UniformStream s(sha256("bench"));
  for (auto _ : state) benchmark::DoNotOptimize(s.next());
}
BENCHMARK(BM_UniformStream);
BENCHMARK_MAIN();
