#include "wmkit/biaslab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "wmkit/generator.hpp"
#include "wmkit/numeric.hpp"
#include "wmkit/parallel.hpp"

namespace wmkit::bias {
namespace {

constexpr double kTol = 1e-12;
constexpr std::size_t kMcChunk = 4096;

void require_beta(double beta) {
  if (!(beta >= 0.0 && beta <= 0.5)) throw InvalidArgument("beta must lie in [0, 0.5]");
}

void require_enumerable(const TokenDistribution& p) {
  if (p.size() > kMaxEnumerableVocab) {
    throw EnumerationTooLarge("exact enumeration supports N <= " + std::to_string(kMaxEnumerableVocab) +
                              ", got N = " + std::to_string(p.size()) + "; use Monte Carlo");
  }
}

Digest fresh_root(std::uint64_t seed) {
  std::vector<std::uint8_t> material{'w', 'm', 'k', 'i', 't', '-', 'm', 'c'};
  for (int shift = 56; shift >= 0; shift -= 8) material.push_back(static_cast<std::uint8_t>(seed >> shift));
  return sha256(material);
}

// Visits every permutation once together with its reverse. For each visited
// order the callback receives, per token, the length of its interval below
// and above 1/2; under the reversed order those two lengths swap.
template <typename Fn>
std::size_t for_each_permutation_pair(const TokenDistribution& p, Fn&& fn) {
  const std::size_t n = p.size();
  std::vector<TokenId> order(n);
  std::iota(order.begin(), order.end(), TokenId{0});
  std::vector<double> low(n), high(n);
  std::size_t visited = 0;
  do {
    if (n >= 2 && order.front() > order.back()) continue;
    CompensatedSum cum;
    for (TokenId t : order) {
      const double a = cum.value();
      cum.add(p[t]);
      const double b = cum.value();
      low[t] = std::min(b, 0.5) - std::min(a, 0.5);
      high[t] = std::max(b, 0.5) - std::max(a, 0.5);
    }
    fn(low, high, n >= 2);
    visited += n >= 2 ? 2 : 1;
  } while (std::next_permutation(order.begin(), order.end()));
  return visited;
}

double beta_mass(double beta, double low, double high) {
  return 2.0 * beta * low + 2.0 * (1.0 - beta) * high;
}

double overlap(const TokenDistribution& p, const TokenDistribution& q) {
  CompensatedSum s;
  for (std::size_t t = 0; t < p.size(); ++t) s.add(std::min(p.probs()[t], q.probs()[t]));
  return s.value();
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(15);
  os << x;
  return os.str();
}

}  // namespace

Digest fresh_digest(std::uint64_t seed, std::uint64_t index) { return stream_block(fresh_root(seed), index); }

bool consistent(const BiasReport& r) {
  if (r.exact && r.closed_form && std::abs(*r.exact - *r.closed_form) > 1e-9) return false;
  if (r.exact && r.bounds && (*r.exact < r.bounds->lo - kTol || *r.exact > r.bounds->hi + kTol)) return false;
  return true;
}

double exact_bias_permute(const TokenDistribution& p, double beta) {
  require_beta(beta);
  require_enumerable(p);
  if (beta == 0.5) return 0.0;
  const std::size_t n = p.size();
  CompensatedSum total;
  const std::size_t count = for_each_permutation_pair(p, [&](const auto& low, const auto& high, bool paired) {
    CompensatedSum fwd, rev;
    for (std::size_t t = 0; t < n; ++t) {
      fwd.add(std::min(p.probs()[t], beta_mass(beta, low[t], high[t])));
      if (paired) rev.add(std::min(p.probs()[t], beta_mass(beta, high[t], low[t])));
    }
    total.add(fwd.value());
    if (paired) total.add(rev.value());
  });
  return std::clamp(1.0 - total.value() / static_cast<double>(count), 0.0, 1.0);
}

double exact_collision_permute(const TokenDistribution& p, double beta) {
  require_beta(beta);
  require_enumerable(p);
  const std::size_t n = p.size();
  CompensatedSum total;
  const std::size_t count = for_each_permutation_pair(p, [&](const auto& low, const auto& high, bool paired) {
    for (std::size_t t = 0; t < n; ++t) {
      const double f = beta == 0.5 ? p.probs()[t] : beta_mass(beta, low[t], high[t]);
      total.add(f * f);
      if (paired) {
        const double g = beta == 0.5 ? p.probs()[t] : beta_mass(beta, high[t], low[t]);
        total.add(g * g);
      }
    }
  });
  return total.value() / static_cast<double>(count);
}

double closed_bias_is_gr(const TokenDistribution& p) {
  CompensatedSum s;
  for (double x : p.probs()) s.add(x * x);
  return std::clamp(1.0 - s.value(), 0.0, 1.0);
}

Bounds pr_bias_bounds(const TokenDistribution& p) {
  const double mp = p.max_prob();
  return Bounds{0.5 * (1.0 - mp), 0.5 - std::max(mp - 0.5, 0.0)};
}

double beta_bias_bound(const TokenDistribution& p, double beta) {
  return beta_bias_bound(p, beta, exact_bias_permute(p, 0.0));
}

double beta_bias_bound(const TokenDistribution& p, double beta, double pr_bias) {
  require_beta(beta);
  return pr_bias - beta * (1.0 - p.max_prob());
}

MonteCarloEstimate mc_bias(const TokenDistribution& p, const PdaRule& rule, std::size_t samples,
                           std::uint64_t seed) {
  validate(rule);
  if (samples == 0) throw InvalidArgument("mc_bias: samples must be positive");
  const Digest root = fresh_root(seed);
  const std::size_t chunks = chunk_count(samples, kMcChunk);
  std::vector<CompensatedSum> sums(chunks), squares(chunks);
  parallel_chunks(samples, kMcChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const RuleOutcome out = apply_rule(rule, p, stream_block(root, i));
      double ov = 0.0;
      if (const auto* t = std::get_if<TokenId>(&out)) {
        ov = p[*t];
      } else {
        ov = overlap(p, std::get<TokenDistribution>(out));
      }
      sums[c].add(ov);
      squares[c].add(ov * ov);
    }
  });
  CompensatedSum s, ss;
  for (std::size_t c = 0; c < chunks; ++c) {
    s.add(sums[c]);
    ss.add(squares[c]);
  }
  const double n = static_cast<double>(samples);
  const double mean = s.value() / n;
  const double var = samples > 1 ? std::max(0.0, (ss.value() - n * mean * mean) / (n - 1.0)) : 0.0;
  return MonteCarloEstimate{std::clamp(1.0 - mean, 0.0, 1.0), std::sqrt(var / n), samples};
}

BiasReport bias_report(const TokenDistribution& p, const PdaRule& rule, bool exact, std::size_t mc_samples,
                       std::uint64_t seed) {
  validate(rule);
  BiasReport report{rule, {}, {}, {}, {}};
  const bool permute_family =
      std::holds_alternative<rule::PermuteReweight>(rule) || std::holds_alternative<rule::Beta>(rule);
  const double beta = std::holds_alternative<rule::Beta>(rule) ? std::get<rule::Beta>(rule).beta : 0.0;
  if (is_dirac_rule(rule)) report.closed_form = closed_bias_is_gr(p);
  if (permute_family && beta == 0.0) report.bounds = pr_bias_bounds(p);
  if (exact) {
    if (permute_family) {
      report.exact = exact_bias_permute(p, beta);
    } else if (is_dirac_rule(rule)) {
      report.exact = closed_bias_is_gr(p);
    } else {
      throw InvalidArgument("exact mode is not available for the soft rule; use Monte Carlo");
    }
  }
  if (mc_samples > 0) report.mc = mc_bias(p, rule, mc_samples, seed);
  return report;
}

bool TheoremReport::all_passed() const { return failures() == 0; }

std::size_t TheoremReport::failures() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const TheoremCheck& c) { return !c.passed; }));
}

TheoremReport verify_theorems(const TokenDistribution& p, std::span<const double> betas) {
  require_enumerable(p);
  TheoremReport report;
  const double mp = p.max_prob();
  const double is_gr = closed_bias_is_gr(p);
  const double pr = exact_bias_permute(p, 0.0);
  const Bounds b = pr_bias_bounds(p);

  report.checks.push_back({"pr_le_is_gr", pr <= is_gr + kTol, "D(PR)=" + fmt(pr) + " D(IS/GR)=" + fmt(is_gr)});
  report.checks.push_back({"pr_within_bounds", pr >= b.lo - kTol && pr <= b.hi + kTol,
                           "D(PR)=" + fmt(pr) + " in [" + fmt(b.lo) + ", " + fmt(b.hi) + "]"});

  std::vector<double> sorted(betas.begin(), betas.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<double> d(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    d[i] = sorted[i] == 0.0 ? pr : exact_bias_permute(p, sorted[i]);
    const double bound = beta_bias_bound(p, sorted[i], pr);
    report.checks.push_back({"beta_bound@" + fmt(sorted[i]), d[i] <= bound + kTol,
                             "D=" + fmt(d[i]) + " bound=" + fmt(bound)});
  }
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    const double gap = d[i] - d[i + 1];
    const double required = (sorted[i + 1] - sorted[i]) * (1.0 - mp);
    const bool ok = gap >= required - kTol && (mp >= 1.0 || gap > 0.0 || required <= kTol);
    report.checks.push_back({"beta_monotone@" + fmt(sorted[i]) + "<" + fmt(sorted[i + 1]), ok,
                             "gap=" + fmt(gap) + " required>=" + fmt(required)});
  }
  return report;
}

TokenDistribution random_distribution(std::uint64_t seed, std::size_t n) {
  if (n == 0) throw EmptyVocabulary("random_distribution: n must be at least 1");
  SamplingRng rng(seed);
  std::vector<double> w(n);
  for (double& x : w) x = -std::log(1.0 - rng.uniform());
  if (n > 1 && rng.below(4) == 0) {
    const std::size_t zeros = rng.below(n - 1) + 1;
    for (std::size_t k = 0; k < zeros; ++k) w[rng.below(n)] = 0.0;
    if (std::all_of(w.begin(), w.end(), [](double x) { return x == 0.0; })) w[rng.below(n)] = 1.0;
  }
  return normalize(w);
}

bool SuiteReport::all_passed() const {
  return std::all_of(lines.begin(), lines.end(), [](const SuiteLine& l) { return l.failed == 0; });
}

SuiteReport verify_theorem_suite(std::size_t trials, std::size_t nmax, std::span<const double> betas,
                                 std::uint64_t seed) {
  if (nmax < 2 || nmax > kMaxEnumerableVocab) {
    throw InvalidArgument("nmax must lie in 2.." + std::to_string(kMaxEnumerableVocab));
  }
  for (double b : betas) require_beta(b);
  std::vector<TheoremReport> reports(trials);
  std::vector<std::string> labels(trials);
  parallel_chunks(trials, 1, [&](std::size_t, std::size_t i, std::size_t) {
    SamplingRng rng(substream_seed(seed, 2 * i));
    const std::size_t n = 2 + rng.below(nmax - 1);
    const TokenDistribution p = random_distribution(substream_seed(seed, 2 * i + 1), n);
    reports[i] = verify_theorems(p, betas);
    labels[i] = "trial " + std::to_string(i) + " (N=" + std::to_string(n) + ")";
  });
  SuiteReport suite;
  suite.trials = trials;
  for (std::size_t i = 0; i < trials; ++i) {
    for (const auto& c : reports[i].checks) {
      const std::string family = c.name.substr(0, c.name.find('@'));
      auto it = std::find_if(suite.lines.begin(), suite.lines.end(),
                             [&](const SuiteLine& l) { return l.name == family; });
      if (it == suite.lines.end()) {
        suite.lines.push_back({family, 0, 0, {}});
        it = suite.lines.end() - 1;
      }
      ++it->checked;
      if (!c.passed) {
        if (it->failed++ == 0) it->first_failure = labels[i] + " " + c.name + ": " + c.detail;
      }
    }
  }
  return suite;
}

CollisionReport collision_joint(const TokenDistribution& p, const PdaRule& rule, std::size_t repeats,
                                std::size_t samples, std::uint64_t seed) {
  validate(rule);
  if (repeats < 2) throw InvalidArgument("collision_joint: repeats must be at least 2");
  if (samples == 0) throw InvalidArgument("collision_joint: samples must be positive");
  const std::size_t n = p.size();
  const Digest root = fresh_root(seed);
  const std::size_t chunks = chunk_count(samples, kMcChunk);
  std::vector<std::vector<std::size_t>> counts(chunks, std::vector<std::size_t>(n, 0));
  parallel_chunks(samples, kMcChunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
    SamplingRng rng(substream_seed(seed, c));
    for (std::size_t i = begin; i < end; ++i) {
      const RuleOutcome out = apply_rule(rule, p, stream_block(root, i));
      if (const auto* t = std::get_if<TokenId>(&out)) {
        ++counts[c][*t];
        continue;
      }
      const auto& q = std::get<TokenDistribution>(out);
      const TokenId first = rng.sample(q);
      bool same = true;
      for (std::size_t r = 1; r < repeats; ++r) same = (rng.sample(q) == first) && same;
      if (same) ++counts[c][first];
    }
  });

  CollisionReport report;
  report.samples = samples;
  report.repeats = repeats;
  report.joint.assign(n, 0.0);
  report.product.assign(n, 0.0);
  report.gap.assign(n, 0.0);
  CompensatedSum joint_total, product_total;
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t hits = 0;
    for (std::size_t c = 0; c < chunks; ++c) hits += counts[c][t];
    report.joint[t] = static_cast<double>(hits) / static_cast<double>(samples);
    report.product[t] = std::pow(p.probs()[t], static_cast<double>(repeats));
    report.gap[t] = report.joint[t] - report.product[t];
    joint_total.add(report.joint[t]);
    product_total.add(report.product[t]);
  }
  report.joint_total = joint_total.value();
  report.product_total = product_total.value();
  const double q = report.joint_total;
  report.joint_total_std_error = std::sqrt(std::max(0.0, q * (1.0 - q)) / static_cast<double>(samples));
  return report;
}

}  // namespace wmkit::bias
