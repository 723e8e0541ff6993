#pragma once

// Expected total variation D(P, F) = 1 - E_k[ sum_t min(P(t), F(P|k)(t)) ]
// for the distortion-free rules: exact enumeration over permutations,
// closed forms, Monte Carlo over keys, and the bounds relating them.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wmkit/core.hpp"
#include "wmkit/pda.hpp"

namespace wmkit::bias {

/// Largest vocabulary enumerated exhaustively (9! permutations).
inline constexpr std::size_t kMaxEnumerableVocab = 9;

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;
};

struct BiasReport {
  PdaRule rule;
  std::optional<double> exact;
  std::optional<MonteCarloEstimate> mc;
  std::optional<double> closed_form;
  std::optional<Bounds> bounds;
};

/// Checks the report's internal consistency (exact vs closed form within
/// 1e-9, exact inside bounds within 1e-12).
[[nodiscard]] bool consistent(const BiasReport& report);

/// D(P, F_beta) averaged over all N! permutations; beta = 0 is
/// permute-reweight. Each permutation is visited together with its reverse,
/// whose interval halves swap roles. Throws EnumerationTooLarge for N > 9.
double exact_bias_permute(const TokenDistribution& p, double beta);

/// E_pi[ sum_t F_beta(P|pi)(t)^2 ]: probability that two independent draws
/// under one shared key agree.
double exact_collision_permute(const TokenDistribution& p, double beta);

/// 1 - sum_t P(t)^2, shared by Gumbel and inverse sampling.
double closed_bias_is_gr(const TokenDistribution& p);

/// [0.5 (1 - max P), 0.5 - max(max P - 0.5, 0)] bracketing D(P, F_PR).
Bounds pr_bias_bounds(const TokenDistribution& p);

/// D(P, F_PR) - beta (1 - max P), with D(P, F_PR) enumerated exactly.
double beta_bias_bound(const TokenDistribution& p, double beta);
/// Same bound from a precomputed (exact or Monte Carlo) D(P, F_PR).
double beta_bias_bound(const TokenDistribution& p, double beta, double pr_bias);

/// Monte Carlo D(P, rule) over `samples` fresh key digests derived from
/// `seed`. Dirac rules contribute P at the selected token.
MonteCarloEstimate mc_bias(const TokenDistribution& p, const PdaRule& rule, std::size_t samples,
                           std::uint64_t seed);

/// Fills every field that applies to `rule`: exact enumeration when
/// `exact` and N <= 9, Monte Carlo when `mc_samples > 0`.
BiasReport bias_report(const TokenDistribution& p, const PdaRule& rule, bool exact,
                       std::size_t mc_samples, std::uint64_t seed);

struct TheoremCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct TheoremReport {
  std::vector<TheoremCheck> checks;
  [[nodiscard]] bool all_passed() const;
  [[nodiscard]] std::size_t failures() const;
};

/// Exact-mode checks on one distribution:
///  - permute-reweight bias <= 1 - sum P^2;
///  - permute-reweight bias inside pr_bias_bounds;
///  - for consecutive sorted betas b1 < b2:
///    D(b1) - D(b2) >= (b2 - b1)(1 - max P), hence strictly decreasing when
///    max P < 1;
///  - D(beta) <= D(PR) - beta (1 - max P) for each beta.
/// All comparisons use tolerance 1e-12.
TheoremReport verify_theorems(const TokenDistribution& p, std::span<const double> betas);

/// Random distribution over n tokens for property suites: Dirichlet(1)
/// weights, and with probability 1/4 a random subset of tokens zeroed.
TokenDistribution random_distribution(std::uint64_t seed, std::size_t n);

struct SuiteLine {
  /// Check family (the part of TheoremCheck::name before '@').
  std::string name;
  std::size_t checked = 0;
  std::size_t failed = 0;
  std::string first_failure;
};

struct SuiteReport {
  std::vector<SuiteLine> lines;
  std::size_t trials = 0;
  [[nodiscard]] bool all_passed() const;
};

/// verify_theorems over `trials` random distributions with N drawn
/// uniformly from 2..nmax.
SuiteReport verify_theorem_suite(std::size_t trials, std::size_t nmax, std::span<const double> betas,
                                 std::uint64_t seed);

struct CollisionReport {
  /// Pr(all `repeats` draws under one key equal t).
  std::vector<double> joint;
  /// P(t)^repeats, the value for independent draws.
  std::vector<double> product;
  std::vector<double> gap;
  double joint_total = 0.0;
  double joint_total_std_error = 0.0;
  double product_total = 0.0;
  std::size_t samples = 0;
  std::size_t repeats = 0;
};

/// Same-prompt single-token experiment: for each of `samples` fresh keys,
/// draw `repeats` tokens from F(P|k) (Dirac rules repeat their token) and
/// record whether they all agree.
CollisionReport collision_joint(const TokenDistribution& p, const PdaRule& rule, std::size_t repeats,
                                std::size_t samples, std::uint64_t seed);

/// Digest number `index` of the fresh-key family seeded by `seed`.
Digest fresh_digest(std::uint64_t seed, std::uint64_t index);

}  // namespace wmkit::bias
