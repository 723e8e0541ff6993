// Acceptance run: one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "wmkit/biaslab.hpp"
#include "wmkit/detector.hpp"
#include "wmkit/harness.hpp"
#include "wmkit/keying.hpp"
#include "wmkit/pda.hpp"
#include "wmkit/permutation.hpp"

using namespace wmkit;
using nlohmann::json;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

double sum_sq(const TokenDistribution& p) {
  double s = 0;
  for (double x : p.probs()) s += x * x;
  return s;
}

TokenDistribution random_p(std::mt19937_64& rng, std::size_t n) {
  return TokenDistribution::from_probs(oracle::random_probs(rng, n));
}

const std::vector<double> kBetas{0.0, 0.05, 0.1, 0.2, 0.3};
const std::vector<double> kEpsilons{0.0, 0.05, 0.1, 0.2, 0.3};

Verdict permutation_average() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<std::size_t> size(2, 7);
  double worst = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto p = random_p(rng, size(rng));
    const auto orders = oracle::all_orders(p.size());
    for (double beta : {0.0, 0.1, 0.25, 0.4, 0.5}) {
      std::vector<double> avg(p.size(), 0.0);
      for (const auto& order : orders) {
        const auto q = apply_beta(p, Permutation::from_order({order.begin(), order.end()}), beta);
        for (std::size_t t = 0; t < p.size(); ++t) avg[t] += q.probs()[t];
      }
      for (std::size_t t = 0; t < p.size(); ++t) {
        worst = std::max(worst, std::abs(avg[t] / static_cast<double>(orders.size()) - p.probs()[t]));
      }
    }
  }
  return {worst <= 1e-12, "max abs error " + fmt(worst)};
}

Verdict closed_form_bias() {
  std::mt19937_64 rng(202);
  double worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_p(rng, 50);
    const double want = 1.0 - sum_sq(p);
    for (const char* name : {"inverse", "gumbel"}) {
      const auto mc = bias::mc_bias(p, parse_rule(name), 1'000'000, 300 + trial);
      worst = std::max(worst, std::abs(mc.estimate - want) / mc.std_error);
    }
  }
  return {worst <= 3.0, "max |MC - (1 - sum p^2)| = " + fmt(worst, 3) + " stderr"};
}

std::pair<Verdict, Verdict> theorem_suite() {
  const std::vector<double> betas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  const auto suite = bias::verify_theorem_suite(1000, 7, betas, 303);
  std::size_t fail_pr = 0, fail_beta = 0, checked_pr = 0, checked_beta = 0;
  std::string first;
  for (const auto& line : suite.lines) {
    const bool pr = line.name.rfind("pr_", 0) == 0;
    (pr ? fail_pr : fail_beta) += line.failed;
    (pr ? checked_pr : checked_beta) += line.checked;
    if (line.failed > 0 && first.empty()) first = line.first_failure;
  }
  const bool counted = checked_pr == 2 * suite.trials && checked_beta > 0;
  return {{fail_pr == 0 && counted, std::to_string(checked_pr) + " checks, " + std::to_string(fail_pr) + " violations"},
          {fail_beta == 0 && counted,
           std::to_string(checked_beta) + " checks, " + std::to_string(fail_beta) + " violations" +
               (first.empty() ? "" : " (" + first + ")")}};
}

// Exact per-token Pr(both draws = t) under one uniformly random order.
std::vector<double> enumerated_joint(const TokenDistribution& p, double beta) {
  const std::vector<double> probs(p.probs().begin(), p.probs().end());
  const auto orders = oracle::all_orders(probs.size());
  std::vector<double> joint(probs.size(), 0.0);
  for (const auto& order : orders) {
    const auto q = oracle::beta_rule(probs, order, beta);
    for (std::size_t t = 0; t < q.size(); ++t) joint[t] += q[t] * q[t] / static_cast<double>(orders.size());
  }
  return joint;
}

Verdict collision_witness() {
  Verdict v;
  std::mt19937_64 rng(404);
  const std::vector<TokenDistribution> ps{TokenDistribution::uniform(2), random_p(rng, 5)};
  const std::size_t keys = 100'000;
  const auto se_of = [&](double q) { return std::sqrt(q * (1 - q) / static_cast<double>(keys)); };
  const auto within = [&](double x, double want) { return std::abs(x - want) <= 3 * se_of(want) + 1e-12; };
  const auto expect = [&](bool ok, const std::string& what) {
    if (!ok) v.detail += "violated: " + what + "; ";
    v.pass &= ok;
  };
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto& p = ps[i];
    const std::size_t n = p.size();
    for (const char* name : {"inverse", "gumbel"}) {
      const auto c = bias::collision_joint(p, parse_rule(name), 2, keys, 500 + i);
      for (std::size_t t = 0; t < n; ++t) expect(within(c.joint[t], p.probs()[t]), name + std::string(" joint = p"));
    }
    const auto half = bias::collision_joint(p, parse_rule("beta:0.5"), 2, keys, 600 + i);
    for (std::size_t t = 0; t < n; ++t) expect(within(half.joint[t], p.probs()[t] * p.probs()[t]), "beta0.5 joint = p^2");
    const auto zero = bias::collision_joint(p, parse_rule("beta:0"), 2, keys, 700 + i);
    const auto exact = enumerated_joint(p, 0.0);
    double exact_total = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double pt = p.probs()[t];
      expect(within(zero.joint[t], exact[t]), "beta0 joint = enumeration");
      expect(exact[t] >= pt * pt - 1e-15 && exact[t] <= pt + 1e-15, "p^2 <= beta0 enumeration <= p");
      exact_total += exact[t];
    }
    expect(std::abs(bias::exact_collision_permute(p, 0.0) - exact_total) <= 1e-12, "library enumeration");
    if (n > 2) {
      const double se = zero.joint_total_std_error;
      expect(zero.joint_total - 3 * se > sum_sq(p) && zero.joint_total + 3 * se < 1.0, "sum p^2 < beta0 total < 1");
    }
    v.detail += (i ? "; " : "") + std::string("N=") + std::to_string(n) + " token0 beta0 " + fmt(zero.joint[0]) +
                " (enumerated " + fmt(exact[0]) + ", p^2 " + fmt(p.probs()[0] * p.probs()[0]) + ", p " +
                fmt(p.probs()[0]) + ")";
  }
  expect(std::abs(enumerated_joint(ps[0], 0.0)[0] - 0.5) <= 1e-15, "uniform N=2 gives 0.5");
  return v;
}

std::vector<TokenSequence> null_corpus(std::size_t length) {
  auto preset = harness::detection_preset();
  preset.spec.length = length;
  return harness::null_texts(harness::build_toylm(preset), preset.spec, 9001);
}

Verdict hoeffding_thresholds() {
  Verdict v;
  const std::vector<std::pair<double, double>> table{{0.1, 1.073}, {0.05, 1.224}, {0.01, 1.517}, {0.001, 1.859}};
  for (const auto& [alpha, want] : table) {
    const double rounded = std::round(z_for_fpr(alpha) * 1000) / 1000;
    if (std::abs(rounded - want) < 1e-9) continue;
    v.pass = false;
    v.detail += "z(" + fmt(alpha) + ") = " + fmt(z_for_fpr(alpha), 7) + " rounds to " + fmt(rounded) + ", not " +
                fmt(want) + "; ";
  }
  const auto texts = null_corpus(200);
  const BetaDetector detector(SecretKey::from_seed(2024), 100);
  std::vector<double> z;
  for (const auto& t : texts) z.push_back(detector.detect(t, 0.0).z);
  v.detail += std::to_string(texts.size()) + " null texts, rejection";
  for (const auto& [alpha, want] : table) {
    const double rate = static_cast<double>(std::count_if(z.begin(), z.end(), [&](double x) { return x >= want; })) /
                        static_cast<double>(z.size());
    v.pass &= rate <= alpha + 3 * std::sqrt(alpha * (1 - alpha) / static_cast<double>(z.size()));
    v.detail += " " + fmt(rate) + "@" + fmt(alpha);
  }
  return v;
}

Verdict multikey_fpr_check() {
  const auto texts = null_corpus(30);
  const std::size_t keys = 20;
  const double threshold = 0.8;
  std::vector<std::vector<double>> z(texts.size(), std::vector<double>(keys));
  for (std::size_t k = 0; k < keys; ++k) {
    const BetaDetector detector(SecretKey::from_seed(7000 + k), 100);
    for (std::size_t i = 0; i < texts.size(); ++i) z[i][k] = detector.detect(texts[i], threshold).z;
  }
  const double trials = static_cast<double>(texts.size());
  double single = 0;
  for (const auto& row : z) single += static_cast<double>(std::count_if(row.begin(), row.end(), [&](double x) { return x >= threshold; }));
  const double p0 = single / (trials * keys);
  Verdict v{true, "p0 " + fmt(p0)};
  for (std::size_t m : {5, 20}) {
    double hits = 0;
    for (const auto& row : z) hits += *std::max_element(row.begin(), row.begin() + m) >= threshold;
    const double rate = hits / trials;
    const double want = multikey_fpr(p0, m);
    const double slope = static_cast<double>(m) * std::pow(1 - p0, static_cast<double>(m - 1));
    const double sigma = std::sqrt(rate * (1 - rate) / trials + slope * slope * p0 * (1 - p0) / (trials * keys));
    v.pass &= std::abs(rate - want) <= 3 * sigma;
    v.detail += ", M=" + std::to_string(m) + " " + fmt(rate) + " vs " + fmt(want) + " (sigma " + fmt(sigma, 2) + ")";
  }
  return v;
}

std::vector<PdaRule> beta_rules() {
  std::vector<PdaRule> rules;
  for (double b : kBetas) rules.push_back(rule::Beta{b});
  return rules;
}

Verdict detection_trend() {
  auto preset = harness::detection_preset();
  const auto lm = harness::build_toylm(preset);
  const auto rules = beta_rules();
  const std::vector<double> fprs{0.01};
  const auto rows = harness::run_detection_table(lm, preset.spec, rules, fprs, harness::ThresholdMode::Calibrated);
  Verdict v{true, "TPR"};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    v.detail += " " + fmt(rows[i].tpr) + "@" + fmt(rows[i].param);
    if (i == 0) continue;
    const auto var = [](const harness::DetectionRow& r) { return r.tpr * (1 - r.tpr) / static_cast<double>(r.n_pos); };
    v.pass &= rows[i - 1].tpr - rows[i].tpr >= 3 * std::sqrt(var(rows[i - 1]) + var(rows[i]));
  }
  return v;
}

Verdict delta_ordering() {
  auto strong = harness::strong_preset();
  strong.spec.rules = {parse_rule("inverse"), parse_rule("gumbel"), parse_rule("beta:0"), parse_rule("beta:0.3")};
  const auto table = harness::run_strong_experiment(harness::build_toylm(strong), strong.spec);
  const auto& rows = table.rows;
  const auto z = [](const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0;
    for (std::size_t i = 0; i < a.size(); ++i) diff += a[i] - b[i];
    return diff / static_cast<double>(a.size()) / harness::paired_std_error(a, b);
  };
  const double z_ig = z(rows[0].terms, rows[1].terms);
  const double z_i0 = z(rows[0].terms, rows[2].terms);
  const double z_g0 = z(rows[1].terms, rows[2].terms);
  const double z_03 = z(rows[2].terms, rows[3].terms);
  const double z_3b = z(rows[3].terms, table.baseline_terms);
  Verdict v;
  v.pass = std::abs(z_ig) < 3 && z_i0 >= 3 && z_g0 >= 3 && z_03 >= 3 && z_3b >= 3;
  v.detail = "strong Delta inv " + fmt(rows[0].delta) + " gum " + fmt(rows[1].delta) + " b0 " + fmt(rows[2].delta) +
             " b0.3 " + fmt(rows[3].delta) + " base " + fmt(table.baseline_delta) + "; paired z inv-gum " +
             fmt(z_ig, 3) + " inv-b0 " + fmt(z_i0, 3) + " gum-b0 " + fmt(z_g0, 3) + " b0-b0.3 " + fmt(z_03, 3) +
             " b0.3-base " + fmt(z_3b, 3);

  auto weak = harness::weak_preset();
  weak.spec.rules = {parse_rule("inverse"), parse_rule("gumbel"), parse_rule("beta:0"), parse_rule("beta:0.3"),
                     parse_rule("beta:0.5")};
  const auto wt = harness::run_weak_experiment(harness::build_toylm(weak), weak.spec);
  double min_p = 1;
  for (const auto& row : wt.rows) min_p = std::min(min_p, row.ks_p_value);
  v.pass &= min_p > 0.001;
  v.detail += "; weak min KS p " + fmt(min_p);
  return v;
}

Verdict attack_trend() {
  auto preset = harness::detection_preset();
  const auto lm = harness::build_toylm(preset);
  std::vector<std::vector<double>> auc;
  for (const auto& rule : beta_rules()) {
    std::vector<double> row;
    for (const auto& r : harness::run_attack_sweep(lm, preset.spec, rule, kEpsilons)) row.push_back(r.auc);
    auc.push_back(row);
  }
  Verdict v;
  for (std::size_t b = 0; b < auc.size(); ++b) {
    for (std::size_t e = 0; e < auc[b].size(); ++e) {
      if (e > 0) v.pass &= auc[b][e] <= auc[b][e - 1];
      if (b > 0) v.pass &= auc[b][e] <= auc[b - 1][e];
    }
  }
  v.pass &= auc[0][0] >= 0.99;
  v.detail = "AUC beta0 eps0 " + fmt(auc[0][0], 5) + ", beta0 eps0.3 " + fmt(auc[0].back(), 4) + ", beta0.3 eps0 " +
             fmt(auc.back()[0], 4) + ", beta0.3 eps0.3 " + fmt(auc.back().back(), 4);
  return v;
}

std::vector<std::uint32_t> order_of(const Permutation& p) { return {p.order().begin(), p.order().end()}; }

std::string hex_of(const std::vector<std::uint8_t>& bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  for (auto b : bytes) {
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

ContextKey context_named(const std::string& name) {
  if (name == "ngram_5_17_2") return NGramContext{{5, 17, 2}};
  if (name == "ngram_empty") return NGramContext{{}};
  if (name == "position_7") return PositionContext{7};
  if (name == "fixed_3") return FixedIndexContext{3};
  throw std::runtime_error("unknown golden context " + name);
}

Verdict golden_conformance() {
  std::ifstream in(oracle::golden_path("keying_golden.json"));
  const json g = json::parse(in);
  std::size_t compared = 0, mismatched = 0;
  const auto check = [&](bool ok) {
    ++compared;
    mismatched += !ok;
  };
  const SecretKey seeded = SecretKey::from_seed(42);
  const SecretKey counting = SecretKey::from_hex(g["secret_bytes0to127"].get<std::string>());
  check(seeded.to_hex() == g["secret_seed42"].get<std::string>());
  for (const auto& entry : g["keys"]) {
    const WatermarkKey key{entry["secret"] == "seed42" ? seeded : counting, context_named(entry["context"])};
    check(hex_of(encode_key(key)) == entry["encoding"].get<std::string>());
    const Digest d = key_digest(key);
    check(d.hex() == entry["digest"].get<std::string>());
    check(order_of(derive_permutation(d, 10)) == entry["perm10"].get<std::vector<std::uint32_t>>());
    UniformStream s(d);
    for (double u : entry["first_uniforms"]) check(s.next() == u);
  }
  const auto& tv = g["test_vector"];
  const Digest d = sha256("wmkit-test-vector");
  check(d.hex() == tv["digest"].get<std::string>());
  check(stream_block(d, 0).hex() == tv["block0"].get<std::string>());
  UniformStream s(d);
  for (double u : tv["uniforms"]) check(s.next() == u);
  for (std::size_t n : {2, 10, 100}) {
    check(order_of(derive_permutation(d, n)) == tv["perm" + std::to_string(n)].get<std::vector<std::uint32_t>>());
  }
  return {mismatched == 0 && compared > 100, std::to_string(compared) + " values, " + std::to_string(mismatched) + " mismatches"};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional criterion ids restrict the run.
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  int failures = 0;
  const auto report = [&](int id, const std::string& name, const std::function<Verdict()>& run, double limit_s = 0) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end() &&
        !(id == 4 && std::find(only.begin(), only.end(), 3) != only.end())) {
      return;
    }
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (limit_s > 0 && secs >= limit_s) {
      v.pass = false;
      v.detail += ", over the " + fmt(limit_s) + " s budget";
    }
    failures += !v.pass;
    std::printf("%s [%d] %s: %s (%.1f s)\n", v.pass ? "PASS" : "FAIL", id, name.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
  };

  report(1, "exact distortion-freeness", permutation_average, 60);
  report(2, "closed-form IS/GR bias", closed_form_bias, 120);
  std::pair<Verdict, Verdict> suite;
  report(3, "PR bias sandwich and dominance", [&] {
    suite = theorem_suite();
    return suite.first;
  });
  report(4, "beta bias monotonicity and bound", [&] { return suite.second; });
  report(5, "strong-violation collision witness", collision_witness);
  report(6, "Hoeffding thresholds", hoeffding_thresholds);
  report(7, "multi-key FPR", multikey_fpr_check);
  report(8, "detection power trend", detection_trend);
  report(9, "Delta ordering", delta_ordering);
  report(10, "attack robustness trend", attack_trend);
  report(11, "golden conformance", golden_conformance);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
