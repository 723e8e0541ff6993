#include "wmkit/pda.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "wmkit/numeric.hpp"

namespace wmkit {
namespace {

void require_same_size(const TokenDistribution& p, const Permutation& perm) {
  if (p.size() != perm.size()) {
    throw DimensionMismatch("permutation over " + std::to_string(perm.size()) +
                            " tokens applied to distribution over " + std::to_string(p.size()));
  }
}

void require_beta(double beta) {
  if (!(beta >= 0.0 && beta <= 0.5)) {
    throw InvalidArgument("beta must lie in [0, 0.5], got " + std::to_string(beta));
  }
}

// Rescales only when accumulated rounding (or input slack) pushed the total
// outside the output tolerance.
TokenDistribution finish(std::vector<double> values) {
  const double total = compensated_total(values);
  if (std::abs(total - 1.0) > 1e-13 && total > 0.0) {
    for (double& v : values) v /= total;
  }
  return TokenDistribution::from_probs(std::move(values), kOutputSumTolerance);
}

// Cumulative mass in permutation order: before[t] = mass of tokens ranked
// strictly ahead of t, after[t] = before[t] + p_t.
struct Intervals {
  std::vector<double> before;
  std::vector<double> after;
};

Intervals permuted_intervals(const TokenDistribution& p, const Permutation& perm) {
  const std::size_t n = p.size();
  Intervals iv{std::vector<double>(n), std::vector<double>(n)};
  CompensatedSum cum;
  for (std::size_t r = 1; r <= n; ++r) {
    const TokenId t = perm.token_at(r);
    iv.before[t] = cum.value();
    cum.add(p[t]);
    iv.after[t] = cum.value();
  }
  return iv;
}

double positive_part(double x) { return std::max(x, 0.0); }

std::string format_double(double x) {
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view s, std::string_view what) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidArgument("cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

PdaRule parse_rule(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view args = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  PdaRule rule;
  if (name == "gumbel" && args.empty()) {
    rule = rule::Gumbel{};
  } else if (name == "inverse" && args.empty()) {
    rule = rule::InverseSampling{};
  } else if (name == "pr" && args.empty()) {
    rule = rule::PermuteReweight{};
  } else if (name == "beta" && !args.empty()) {
    rule = rule::Beta{parse_double(args, "beta")};
  } else if (name == "soft") {
    rule::Soft soft;
    std::string_view rest = args;
    bool have_delta = false;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) {
        soft.delta = parse_double(item, "delta");
        have_delta = true;
        continue;
      }
      const auto key = item.substr(0, eq);
      const auto value = item.substr(eq + 1);
      if (key == "delta") {
        soft.delta = parse_double(value, "delta");
        have_delta = true;
      } else if (key == "gamma") {
        soft.gamma = parse_double(value, "gamma");
      } else {
        throw InvalidArgument("unknown soft rule parameter '" + std::string(key) + "'");
      }
    }
    if (!have_delta) throw InvalidArgument("soft rule requires delta");
    rule = soft;
  } else {
    throw InvalidArgument("unknown rule '" + std::string(text) + "'");
  }
  validate(rule);
  return rule;
}

std::string to_string(const PdaRule& rule) {
  return std::visit(
      [](const auto& r) -> std::string {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, rule::Gumbel>) return "gumbel";
        else if constexpr (std::is_same_v<T, rule::InverseSampling>) return "inverse";
        else if constexpr (std::is_same_v<T, rule::PermuteReweight>) return "pr";
        else if constexpr (std::is_same_v<T, rule::Beta>) return "beta:" + format_double(r.beta);
        else return "soft:delta=" + format_double(r.delta) + ",gamma=" + format_double(r.gamma);
      },
      rule);
}

std::string rule_family(const PdaRule& rule) {
  const std::string s = to_string(rule);
  return s.substr(0, s.find(':'));
}

double rule_param(const PdaRule& rule) {
  if (const auto* b = std::get_if<rule::Beta>(&rule)) return b->beta;
  if (const auto* s = std::get_if<rule::Soft>(&rule)) return s->delta;
  return 0.0;
}

void validate(const PdaRule& rule) {
  if (const auto* b = std::get_if<rule::Beta>(&rule)) require_beta(b->beta);
  if (const auto* s = std::get_if<rule::Soft>(&rule)) {
    if (!(s->delta >= 0.0) || !std::isfinite(s->delta)) throw InvalidArgument("soft delta must be >= 0");
    if (!(s->gamma > 0.0 && s->gamma < 1.0)) throw InvalidArgument("soft gamma must lie in (0, 1)");
  }
}

bool is_dirac_rule(const PdaRule& rule) {
  return std::holds_alternative<rule::Gumbel>(rule) ||
         std::holds_alternative<rule::InverseSampling>(rule);
}

TokenId apply_gumbel(const TokenDistribution& p, const Digest& digest) {
  const std::vector<double> g = derive_gumbel(digest, p.size());
  TokenId best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p.probs()[t] <= 0.0) continue;
    const double score = g[t] + std::log(p.probs()[t]);
    if (!found || score > best_score) {
      best = static_cast<TokenId>(t);
      best_score = score;
      found = true;
    }
  }
  return best;
}

TokenId inverse_select(const TokenDistribution& p, double r) {
  if (!(r >= 0.0 && r < 1.0)) throw InvalidArgument("inverse_select: r must lie in [0, 1)");
  CompensatedSum cum;
  TokenId last_positive = 0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p.probs()[t] <= 0.0) continue;
    last_positive = static_cast<TokenId>(t);
    cum.add(p.probs()[t]);
    if (cum.value() > r) return last_positive;
  }
  // r beyond the rounded total mass.
  return last_positive;
}

TokenId apply_inverse(const TokenDistribution& p, const Digest& digest) {
  return inverse_select(p, derive_uniform(digest));
}

TokenDistribution apply_permute_reweight(const TokenDistribution& p, const Permutation& perm) {
  require_same_size(p, perm);
  const Intervals iv = permuted_intervals(p, perm);
  std::vector<double> out(p.size());
  for (std::size_t t = 0; t < p.size(); ++t) {
    out[t] = positive_part(2.0 * iv.after[t] - 1.0) - positive_part(2.0 * iv.before[t] - 1.0);
  }
  return finish(std::move(out));
}

TokenDistribution apply_beta(const TokenDistribution& p, const Permutation& perm, double beta) {
  require_beta(beta);
  require_same_size(p, perm);
  if (beta == 0.5) return p;
  const std::size_t n = p.size();
  const Intervals iv = permuted_intervals(p, perm);

  // Reverse cumulative sums: at_or_after[t] = mass ranked at or after t.
  std::vector<double> at_or_after(n), strictly_after(n);
  CompensatedSum rev;
  for (std::size_t r = n; r >= 1; --r) {
    const TokenId t = perm.token_at(r);
    strictly_after[t] = rev.value();
    rev.add(p[t]);
    at_or_after[t] = rev.value();
  }

  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double forward = positive_part(2.0 * iv.after[t] - 1.0) - positive_part(2.0 * iv.before[t] - 1.0);
    const double mirrored =
        positive_part(2.0 * at_or_after[t] - 1.0) - positive_part(2.0 * strictly_after[t] - 1.0);
    out[t] = (1.0 - beta) * forward + beta * mirrored;
  }
  return finish(std::move(out));
}

TokenDistribution apply_beta_intervals(const TokenDistribution& p, const Permutation& perm,
                                       double beta) {
  require_beta(beta);
  require_same_size(p, perm);
  if (beta == 0.5) return p;
  const Intervals iv = permuted_intervals(p, perm);
  std::vector<double> out(p.size());
  for (std::size_t t = 0; t < p.size(); ++t) {
    const double a = iv.before[t];
    const double b = iv.after[t];
    const double low = std::min(b, 0.5) - std::min(a, 0.5);
    const double high = std::max(b, 0.5) - std::max(a, 0.5);
    out[t] = 2.0 * beta * low + 2.0 * (1.0 - beta) * high;
  }
  return finish(std::move(out));
}

std::vector<TokenId> GreenSet::tokens() const {
  std::vector<TokenId> out;
  out.reserve(count_);
  for (std::size_t t = 0; t < mask_.size(); ++t) {
    if (mask_[t]) out.push_back(static_cast<TokenId>(t));
  }
  return out;
}

std::size_t green_count(std::size_t n, double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw InvalidArgument("gamma must lie in (0, 1)");
  return static_cast<std::size_t>(std::floor(gamma * static_cast<double>(n)));
}

GreenSet green_set(const Digest& digest, std::size_t n, double gamma) {
  const std::size_t count = green_count(n, gamma);
  const Permutation perm = derive_permutation(digest, n);
  std::vector<bool> mask(n, false);
  for (std::size_t r = 1; r <= count; ++r) mask[perm.token_at(r)] = true;
  return GreenSet(std::move(mask), count);
}

TokenDistribution apply_soft(const TokenDistribution& p, const GreenSet& green, double delta) {
  if (!(delta >= 0.0)) throw InvalidArgument("soft delta must be >= 0");
  if (green.vocab_size() != p.size()) throw DimensionMismatch("green set over a different vocabulary");
  if (delta == 0.0) return p;
  const double boost = std::exp(delta);
  std::vector<double> w(p.probs().begin(), p.probs().end());
  for (std::size_t t = 0; t < w.size(); ++t) {
    if (green.contains(static_cast<TokenId>(t))) w[t] *= boost;
  }
  return normalize(w);
}

RuleOutcome apply_rule(const PdaRule& rule, const TokenDistribution& p, const Digest& digest) {
  validate(rule);
  return std::visit(
      [&](const auto& r) -> RuleOutcome {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, rule::Gumbel>) {
          return apply_gumbel(p, digest);
        } else if constexpr (std::is_same_v<T, rule::InverseSampling>) {
          return apply_inverse(p, digest);
        } else if constexpr (std::is_same_v<T, rule::PermuteReweight>) {
          return apply_permute_reweight(p, derive_permutation(digest, p.size()));
        } else if constexpr (std::is_same_v<T, rule::Beta>) {
          if (r.beta == 0.5) return p;
          return apply_beta(p, derive_permutation(digest, p.size()), r.beta);
        } else {
          return apply_soft(p, green_set(digest, p.size(), r.gamma), r.delta);
        }
      },
      rule);
}

RuleOutcome apply_rule(const PdaRule& rule, const TokenDistribution& p, const WatermarkKey& key) {
  return apply_rule(rule, p, key_digest(key));
}

TokenDistribution outcome_distribution(const RuleOutcome& outcome, std::size_t n) {
  if (const auto* t = std::get_if<TokenId>(&outcome)) return TokenDistribution::dirac(n, *t);
  return std::get<TokenDistribution>(outcome);
}

}  // namespace wmkit
