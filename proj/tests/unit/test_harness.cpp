#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wmkit/errors.hpp"
#include "wmkit/harness.hpp"
#include "wmkit/stats.hpp"

using namespace wmkit;
using namespace wmkit::harness;

namespace {

ExperimentSpec small_spec(std::size_t prompts, std::size_t m, std::size_t len) {
  ExperimentSpec s;
  s.prompts = prompts;
  s.responses_per_prompt = m;
  s.length = len;
  s.seed = 3;
  return s;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST(DeltaMetric, Examples) {
  using Table = std::vector<std::vector<double>>;
  const Table a{{1, 2}, {3, 4}};
  EXPECT_EQ(delta_metric(a, a), 0.0);
  EXPECT_DOUBLE_EQ(delta_metric(Table{{1, 3}}, Table{{2, 2}}), 0.0);
  EXPECT_DOUBLE_EQ(delta_metric(Table{{1}, {2}}, Table{{2}, {2}}), 0.5);
  EXPECT_DOUBLE_EQ(delta_metric(Table{{0, 0}, {1, 1}}, Table{{1, 1}, {0, 2}}), 0.5 * (1.0 + 0.0));
  EXPECT_THROW(delta_metric(Table{{1, 2}}, Table{{1}}), DimensionMismatch);
  EXPECT_THROW(delta_metric(Table{{1}, {2}}, Table{{1}}), DimensionMismatch);
  EXPECT_THROW(delta_metric(Table{{1, 2}, {3}}, Table{{1, 2}, {3}}), DimensionMismatch);
  const auto terms = delta_terms(Table{{1}, {2}}, Table{{2}, {2}});
  EXPECT_EQ(terms, (std::vector<double>{1.0, 0.0}));
}

TEST(PairedStdError, Examples) {
  const std::vector<double> a{1, 2, 3, 4}, b{0, 1, 2, 3};
  EXPECT_EQ(paired_std_error(a, b), 0.0);
  const std::vector<double> c{1, 0, 1, 0}, d{0, 0, 0, 0};
  EXPECT_NEAR(paired_std_error(c, d), mean_and_stderr(c).std_error, 1e-15);
  EXPECT_THROW(paired_std_error(a, std::vector<double>{1}), DimensionMismatch);
}

TEST(Spec, Validation) {
  EXPECT_NO_THROW(ExperimentSpec{}.validate());
  auto s = small_spec(0, 1, 1);
  EXPECT_THROW(s.validate(), InvalidArgument);
  s = small_spec(1, 1, 1);
  s.metric = "bleu";
  EXPECT_THROW(s.validate(), InvalidArgument);
}

TEST(Presets, Values) {
  const auto strong = strong_preset();
  EXPECT_EQ(strong.vocab_size, 100u);
  EXPECT_EQ(strong.order, 2u);
  EXPECT_GT(strong.spec.responses_per_prompt, 1u);
  const auto weak = weak_preset();
  EXPECT_EQ(weak.spec.responses_per_prompt, 1u);
  EXPECT_EQ(weak.spec.prompts, 10000u);
  const auto det = detection_preset();
  EXPECT_EQ(det.spec.prompts, 200u);
  EXPECT_EQ(det.spec.responses_per_prompt, 50u);
  EXPECT_EQ(det.spec.length, 30u);
  EXPECT_EQ(det.concentration, 1.0);
}

TEST(ExperimentPrompt, DeterministicAndInRange) {
  const auto s = small_spec(5, 1, 1);
  EXPECT_EQ(experiment_prompt(s, 50, 2), experiment_prompt(s, 50, 2));
  EXPECT_NE(experiment_prompt(s, 50, 2), experiment_prompt(s, 50, 3));
  EXPECT_EQ(experiment_prompt(s, 50, 2).size(), s.prompt_length);
}

TEST(AttackCount, Examples) {
  EXPECT_EQ(attack_count(0.2, 100), 20u);
  EXPECT_EQ(attack_count(0.3, 10), 3u);
  EXPECT_EQ(attack_count(0.05, 30), 2u);
  EXPECT_EQ(attack_count(0.0, 30), 0u);
  EXPECT_EQ(attack_count(1.0, 30), 30u);
}

TEST(ParaphraseAttack, Properties) {
  std::vector<TokenId> toks(100);
  for (std::size_t i = 0; i < toks.size(); ++i) toks[i] = static_cast<TokenId>(i % 7);
  const TokenSequence seq(toks, 1000);
  EXPECT_EQ(paraphrase_attack(seq, 0.0, 5), seq);
  const auto full = paraphrase_attack(seq, 1.0, 5);
  EXPECT_EQ(full.size(), seq.size());
  std::size_t changed_full = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) changed_full += full[i] != seq[i];
  EXPECT_GE(changed_full, 95u);

  const auto small = paraphrase_attack(seq, 0.1, 5);
  const auto large = paraphrase_attack(seq, 0.3, 5);
  std::size_t changed_small = 0, changed_large = 0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    changed_small += small[i] != seq[i];
    changed_large += large[i] != seq[i];
    if (small[i] != seq[i]) EXPECT_EQ(large[i], small[i]);
  }
  EXPECT_LE(changed_small, 10u);
  EXPECT_GE(changed_small, 8u);
  EXPECT_LE(changed_large, 30u);
  EXPECT_EQ(paraphrase_attack(seq, 0.3, 5), large);
  EXPECT_THROW(paraphrase_attack(seq, 1.5, 5), InvalidArgument);
}

TEST(RocAuc, Examples) {
  const std::vector<double> pos{2, 3}, neg{0, 1};
  EXPECT_EQ(roc_auc(pos, neg).auc, 1.0);
  EXPECT_EQ(roc_auc(pos, pos).auc, 0.5);
  const std::vector<double> p2{1, 3}, n2{2, 0};
  EXPECT_DOUBLE_EQ(roc_auc(p2, n2).auc, 0.75);
  EXPECT_THROW(roc_auc(std::vector<double>{}, neg), InvalidArgument);
}

TEST(RocAuc, CurveIsMonotoneAndMatchesTrapezoid) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> pos(50 + trial), neg(70);
    for (auto& x : pos) x = std::round(4 * (g(rng) + 0.7)) / 4;
    for (auto& x : neg) x = std::round(4 * g(rng)) / 4;
    const auto roc = roc_auc(pos, neg);
    for (std::size_t k = 1; k < roc.points.size(); ++k) {
      EXPECT_GE(roc.points[k].fpr, roc.points[k - 1].fpr);
      EXPECT_GE(roc.points[k].tpr, roc.points[k - 1].tpr);
    }
    EXPECT_NEAR(roc.auc, trapezoid_auc(roc.points), 1e-12);
    double wins = 0;
    for (double p : pos) {
      for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    }
    EXPECT_NEAR(roc.auc, wins / (pos.size() * neg.size()), 1e-12);
  }
}

TEST(StrongExperiment, BetaHalfEqualsBaselineAndIsReproducible) {
  const auto lm = build_toylm(30, 2, 0.3, 2);
  auto spec = small_spec(6, 5, 10);
  spec.rules = {rule::Beta{0.5}, rule::Gumbel{}};
  const auto t = run_strong_experiment(lm, spec);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0].terms, t.baseline_terms);
  EXPECT_EQ(t.rows[0].delta, t.baseline_delta);
  EXPECT_FALSE(t.fresh_keys);
  EXPECT_EQ(t.rows[1].rule, "gumbel");
  EXPECT_EQ(t.rows[1].terms.size(), 6u);
  const auto again = run_strong_experiment(lm, spec);
  EXPECT_EQ(again.rows[1].delta, t.rows[1].delta);
  EXPECT_EQ(again.baseline_delta, t.baseline_delta);
}

TEST(StrongViolation, DeterministicRulesRepeatWholeResponses) {
  const auto lm = build_toylm(20, 0, 1.0, 4);
  const auto spec = small_spec(3, 6, 12);
  const auto sk = SecretKey::from_seed(9);
  for (const PdaRule r : {PdaRule(rule::Gumbel{}), PdaRule(rule::InverseSampling{})}) {
    const auto texts = watermarked_texts(lm, spec, r, sk, 16);
    for (std::size_t i = 0; i < spec.prompts; ++i) {
      for (std::size_t j = 1; j < spec.responses_per_prompt; ++j) {
        EXPECT_EQ(texts[i * spec.responses_per_prompt + j], texts[i * spec.responses_per_prompt]);
      }
    }
  }
  const auto sampled = watermarked_texts(lm, spec, rule::Beta{0.5}, sk, 16);
  bool any_differ = false;
  for (std::size_t j = 1; j < spec.responses_per_prompt; ++j) any_differ |= sampled[j] != sampled[0];
  EXPECT_TRUE(any_differ);
}

TEST(WeakExperiment, DistortionFreeRulesMatchBaseline) {
  const auto lm = build_toylm(50, 2, 1.0, 1);
  auto spec = small_spec(2000, 1, 10);
  spec.rules = {rule::Beta{0.0}, rule::Gumbel{}};
  const auto t = run_weak_experiment(lm, spec);
  EXPECT_TRUE(t.fresh_keys);
  for (const auto& row : t.rows) {
    EXPECT_GT(row.ks_p_value, 0.001) << row.rule;
    EXPECT_LT(std::abs(row.delta - t.baseline_delta), 3 * paired_std_error(row.terms, t.baseline_terms)) << row.rule;
  }
}

TEST(Detection, TableShapeAndLengthTrend) {
  const auto lm = build_toylm(100, 2, 1.0, 1);
  auto spec = small_spec(40, 5, 10);
  const std::vector<PdaRule> rules{rule::Beta{0.0}, rule::Soft{2.0, 0.5}};
  const std::vector<double> fprs{0.1, 0.01};
  const auto rows = run_detection_table(lm, spec, rules, fprs, ThresholdMode::Hoeffding);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.n_pos, 200u);
    EXPECT_EQ(r.n_neg, 200u);
    EXPECT_GE(r.tnr, 1 - r.fpr - 3 * std::sqrt(r.fpr * (1 - r.fpr) / 200));
    EXPECT_EQ(r.mode, ThresholdMode::Hoeffding);
  }
  EXPECT_NEAR(rows[0].threshold, z_for_fpr(0.1), 1e-12);
  EXPECT_NEAR(rows[2].threshold, normal_upper_quantile(0.1), 1e-12);

  spec.length = 40;
  const auto longer = run_detection_table(lm, spec, std::span(rules).first(1), std::span(fprs).first(1),
                                          ThresholdMode::Hoeffding);
  EXPECT_GT(longer[0].tpr, rows[0].tpr);

  const auto cal = run_detection_table(lm, spec, std::span(rules).first(1), std::span(fprs).first(1),
                                       ThresholdMode::Calibrated);
  EXPECT_EQ(cal[0].mode, ThresholdMode::Calibrated);
  EXPECT_NEAR(cal[0].tnr, 0.9, 0.08);
}

TEST(Attack, DestroyedWatermarkAndMonotoneSweep) {
  const auto lm = build_toylm(100, 2, 1.0, 1);
  const auto spec = small_spec(40, 5, 30);
  const std::vector<double> eps{0.0, 0.1, 0.3, 1.0};
  const auto rows = run_attack_sweep(lm, spec, rule::Beta{0.0}, eps);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_GT(rows[0].auc, 0.95);
  EXPECT_GE(rows[0].auc, rows[1].auc);
  EXPECT_GE(rows[1].auc, rows[2].auc);
  EXPECT_NEAR(rows[3].auc, 0.5, 0.07);
  EXPECT_EQ(rows[2].epsilon, 0.3);
}

TEST(Csv, Headers) {
  std::ostringstream d, t, a;
  DeltaTable table;
  table.rows.push_back({"beta", 0.3, 0.1, 0.01, 0.02, 0.5, {}});
  write_delta_csv(d, table);
  EXPECT_EQ(first_line(d.str()), "rule,param,delta,baseline_delta,stderr");
  EXPECT_NE(d.str().find("baseline,"), std::string::npos);
  const std::vector<DetectionRow> rows{{"beta", 0.0, 0.01, 1.5, 0.99, 0.9, 10, 10, ThresholdMode::Calibrated}};
  write_detection_csv(t, rows);
  EXPECT_EQ(first_line(t.str()).rfind("rule,param,threshold,tnr,tpr,n_pos,n_neg", 0), 0u);
  EXPECT_NE(t.str().find("calibrated"), std::string::npos);
  const std::vector<AttackRow> arows{{"beta", 0.0, 0.1, 0.9}};
  write_attack_csv(a, arows);
  EXPECT_EQ(first_line(a.str()), "rule,param,epsilon,auc");
}
