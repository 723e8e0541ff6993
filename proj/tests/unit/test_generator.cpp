#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "wmkit/errors.hpp"
#include "wmkit/generator.hpp"

using namespace wmkit;

namespace {

/// Always puts all mass on (last token + 1) mod N.
class CountingModel final : public NextTokenModel {
 public:
  explicit CountingModel(std::size_t n) : n_(n) {}
  std::size_t vocab_size() const override { return n_; }
  TokenDistribution next(std::span<const TokenId> ctx) const override {
    return TokenDistribution::dirac(n_, ctx.empty() ? 0 : static_cast<TokenId>((ctx.back() + 1) % n_));
  }

 private:
  std::size_t n_;
};

/// Three tokens; the conditional depends on the previous token only.
class TableModel final : public NextTokenModel {
 public:
  std::size_t vocab_size() const override { return 3; }
  TokenDistribution next(std::span<const TokenId> ctx) const override {
    return TokenDistribution::from_probs(row(ctx.empty() ? 3 : ctx.back()));
  }
  static std::vector<double> row(std::size_t prev) {
    switch (prev) {
      case 0: return {0.6, 0.3, 0.1};
      case 1: return {0.1, 0.1, 0.8};
      case 2: return {0.3, 0.4, 0.3};
      default: return {0.2, 0.3, 0.5};
    }
  }
};

/// Context-free distribution.
class FixedModel final : public NextTokenModel {
 public:
  explicit FixedModel(std::vector<double> p) : p_(TokenDistribution::from_probs(std::move(p))) {}
  std::size_t vocab_size() const override { return p_.size(); }
  TokenDistribution next(std::span<const TokenId>) const override { return p_; }

 private:
  TokenDistribution p_;
};

class BrokenModel final : public NextTokenModel {
 public:
  std::size_t vocab_size() const override { return 2; }
  TokenDistribution next(std::span<const TokenId> ctx) const override {
    if (ctx.size() >= 3) throw InvalidDistribution("broken");
    return TokenDistribution::uniform(2);
  }
};

GeneratorConfig config(PdaRule rule, KeySampler sampler, std::uint64_t key_seed, std::uint64_t sampling_seed) {
  GeneratorConfig cfg;
  cfg.rule = rule;
  cfg.sampler = sampler;
  cfg.secret = SecretKey::from_seed(key_seed);
  cfg.sampling_seed = sampling_seed;
  return cfg;
}

const std::vector<PdaRule>& all_rules() {
  static const std::vector<PdaRule> rules{rule::Gumbel{}, rule::InverseSampling{}, rule::PermuteReweight{},
                                          rule::Beta{0.0}, rule::Beta{0.2}, rule::Beta{0.5}};
  return rules;
}

}  // namespace

TEST(ParseSampler, Forms) {
  EXPECT_EQ(parse_sampler("ngram:3"), KeySampler(sampler::NGram{3}));
  EXPECT_EQ(parse_sampler("position"), KeySampler(sampler::Position{kDefaultPositionCap}));
  EXPECT_EQ(parse_sampler("position:10"), KeySampler(sampler::Position{10}));
  EXPECT_EQ(parse_sampler("fixed:16"), KeySampler(sampler::FixedSet{16}));
  EXPECT_EQ(parse_sampler(to_string(KeySampler(sampler::FixedSet{16}))), KeySampler(sampler::FixedSet{16}));
  EXPECT_THROW(parse_sampler("ngram:0"), InvalidArgument);
  EXPECT_THROW(parse_sampler("suffix"), InvalidArgument);
}

TEST(Generate, DiracModelIsFixedPointForEveryRuleAndKey) {
  const CountingModel model(7);
  const TokenSequence prompt({3}, 7);
  for (const auto& r : all_rules()) {
    for (std::uint64_t key = 0; key < 5; ++key) {
      const auto g = generate(model, prompt, 10, config(r, sampler::NGram{2}, key, key + 100));
      EXPECT_EQ(g.tokens, TokenSequence({4, 5, 6, 0, 1, 2, 3, 4, 5, 6}, 7)) << to_string(r);
    }
  }
}

TEST(Generate, BetaHalfLeavesDistributionsUntouched) {
  auto cfg = config(rule::Beta{0.5}, sampler::NGram{5}, 1, 2);
  cfg.retain_distributions = true;
  const TableModel model;
  const auto g = generate(model, TokenSequence(std::vector<TokenId>{}, 3), 25, cfg);
  for (const auto& s : g.trace.steps) {
    ASSERT_TRUE(s.pre && s.post);
    EXPECT_EQ(*s.pre, *s.post);
  }
}

TEST(Generate, RepeatedContextIsUnwatermarked) {
  const FixedModel model({0.5, 0.5});
  const auto g = generate(model, TokenSequence({1}, 2), 40, config(rule::Beta{0.0}, sampler::NGram{1}, 3, 4));
  std::set<TokenId> seen{};
  std::vector<TokenId> ctx{1};
  for (std::size_t i = 0; i < g.trace.steps.size(); ++i) {
    const bool first_time = seen.insert(ctx.back()).second;
    EXPECT_EQ(g.trace.steps[i].watermarked, first_time) << "step " << i;
    ASSERT_TRUE(g.trace.steps[i].context.has_value());
    EXPECT_EQ(*g.trace.steps[i].context, ContextKey(NGramContext{{ctx.back()}}));
    ctx.push_back(g.tokens[i]);
  }
  EXPECT_LE(g.trace.watermarked_count(), 2u);
}

TEST(Generate, PositionCapAndFixedSetExhaustion) {
  const FixedModel model({0.25, 0.25, 0.5});
  const TokenSequence prompt(std::vector<TokenId>{}, 3);
  const auto pos = generate(model, prompt, 12, config(rule::Beta{0.1}, sampler::Position{5}, 1, 1));
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(pos.trace.steps[i].watermarked, i < 5);
    if (i < 5) EXPECT_EQ(*pos.trace.steps[i].context, ContextKey(PositionContext{i}));
  }

  const auto fixed = generate(model, prompt, 12, config(rule::Gumbel{}, sampler::FixedSet{8}, 1, 9));
  ASSERT_TRUE(fixed.trace.fixed_offset.has_value());
  const auto r = *fixed.trace.fixed_offset;
  EXPECT_LT(r, 8u);
  for (std::size_t i = 0; i < 12; ++i) {
    EXPECT_EQ(fixed.trace.steps[i].watermarked, i < 8);
    if (i < 8) {
      EXPECT_EQ(*fixed.trace.steps[i].context, ContextKey(FixedIndexContext{(i + r) % 8}));
    } else {
      EXPECT_FALSE(fixed.trace.steps[i].context.has_value());
    }
  }
}

TEST(Generate, DeterministicGivenSeeds) {
  const TableModel model;
  const TokenSequence prompt({0, 1}, 3);
  for (const auto& r : all_rules()) {
    const auto cfg = config(r, sampler::NGram{2}, 11, 12);
    EXPECT_EQ(generate(model, prompt, 30, cfg).tokens, generate(model, prompt, 30, cfg).tokens);
  }
}

TEST(Generate, Errors) {
  const TableModel model;
  const TokenSequence prompt({0}, 3);
  auto cfg = config(rule::Beta{0.0}, sampler::NGram{}, 1, 1);
  EXPECT_THROW(generate(model, prompt, 0, cfg), InvalidArgument);
  cfg.max_len = 4;
  EXPECT_THROW(generate(model, prompt, 5, cfg), InvalidArgument);
  EXPECT_THROW(generate(model, TokenSequence({0}, 4), 2, config(rule::Beta{0.0}, sampler::NGram{}, 1, 1)),
               DimensionMismatch);
  try {
    generate(BrokenModel(), TokenSequence({0}, 2), 6, config(rule::Beta{0.0}, sampler::NGram{}, 1, 1));
    FAIL() << "expected InvalidDistribution";
  } catch (const InvalidDistribution& e) {
    EXPECT_NE(std::string(e.what()).find("step 2"), std::string::npos);
  }
  EXPECT_THROW(generate(model, prompt, 3, config(rule::Beta{0.8}, sampler::NGram{}, 1, 1)), InvalidArgument);
}

TEST(Regenerate, DeterministicRulesRepeatFirstToken) {
  const FixedModel model({0.1, 0.2, 0.3, 0.4});
  const TokenSequence prompt({2, 3}, 4);
  for (const PdaRule r : {PdaRule(rule::Gumbel{}), PdaRule(rule::InverseSampling{})}) {
    const auto runs = regenerate(model, prompt, 5, config(r, sampler::NGram{5}, 7, 1), 200);
    for (const auto& s : runs) EXPECT_EQ(s[0], runs[0][0]);
  }
  EXPECT_THROW(regenerate(model, prompt, 5, config(rule::Gumbel{}, sampler::NGram{5}, 7, 1), 0), InvalidArgument);
}

TEST(Regenerate, BetaHalfFirstTokenFollowsModel) {
  const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
  const FixedModel model(p);
  const std::size_t runs = 100000;
  const auto out = regenerate(model, TokenSequence({0}, 4), 1, config(rule::Beta{0.5}, sampler::NGram{5}, 7, 5), runs);
  std::vector<double> freq(4, 0);
  for (const auto& s : out) freq[s[0]] += 1.0 / runs;
  for (std::size_t t = 0; t < 4; ++t) EXPECT_NEAR(freq[t], p[t], 3 * std::sqrt(p[t] * (1 - p[t]) / runs));
}

TEST(Regenerate, PermuteReweightKeepsTrueRandomness) {
  const std::vector<double> p{0.3, 0.3, 0.4};
  const FixedModel model(p);
  const TokenSequence prompt({1}, 3);
  const auto cfg = config(rule::Beta{0.0}, sampler::NGram{5}, 3, 9);
  const Digest d = key_digest(ngram_key(cfg.secret, prompt, 5));
  const auto adjusted = apply_permute_reweight(TokenDistribution::from_probs(p), derive_permutation(d, 3));
  std::size_t support = 0;
  for (double x : adjusted.probs()) support += x > 0;
  ASSERT_GE(support, 2u);
  std::set<TokenId> first;
  for (const auto& s : regenerate(model, prompt, 1, cfg, 10000)) first.insert(s[0]);
  EXPECT_GE(first.size(), 2u);
}

TEST(Generate, WeaklyDistortionFreeOverFreshKeys) {
  const TableModel model;
  const TokenSequence prompt(std::vector<TokenId>{}, 3);
  const std::size_t keys = 100000;
  std::map<std::pair<TokenId, TokenId>, std::size_t> counts;
  for (std::size_t k = 0; k < keys; ++k) {
    const auto g = generate(model, prompt, 2, config(rule::Beta{0.2}, sampler::NGram{5}, 1000 + k, k));
    ++counts[{g.tokens[0], g.tokens[1]}];
  }
  const auto first = TableModel::row(3);
  for (TokenId a = 0; a < 3; ++a) {
    const auto second = TableModel::row(a);
    for (TokenId b = 0; b < 3; ++b) {
      const double want = first[a] * second[b];
      const double got = counts[{a, b}] / double(keys);
      EXPECT_NEAR(got, want, 4 * std::sqrt(want * (1 - want) / keys)) << a << "," << b;
    }
  }
}

TEST(SamplingRng, UniformAndBelow) {
  SamplingRng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(rng.below(7), 7u);
  }
  EXPECT_THROW(rng.below(0), InvalidArgument);
  EXPECT_EQ(rng.sample(TokenDistribution::dirac(5, 3)), 3u);
}
