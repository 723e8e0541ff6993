#pragma once

// Pseudo-random distribution adjustment rules.
//
// Gumbel and inverse sampling are deterministic given the key and return the
// selected token. Permute-reweight, beta and the soft green-list baseline
// return an adjusted distribution that the caller samples with its own
// (true) randomness.

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wmkit/core.hpp"
#include "wmkit/keying.hpp"
#include "wmkit/permutation.hpp"

namespace wmkit {

inline constexpr double kDefaultGamma = 0.5;

namespace rule {
struct Gumbel {
  friend bool operator==(const Gumbel&, const Gumbel&) = default;
};
struct InverseSampling {
  friend bool operator==(const InverseSampling&, const InverseSampling&) = default;
};
struct PermuteReweight {
  friend bool operator==(const PermuteReweight&, const PermuteReweight&) = default;
};
/// beta in [0, 0.5]; 0 is permute-reweight, 0.5 leaves the distribution unchanged.
struct Beta {
  double beta = 0.0;
  friend bool operator==(const Beta&, const Beta&) = default;
};
/// Green-list logit boost; not distortion-free.
struct Soft {
  double delta = 0.0;
  double gamma = kDefaultGamma;
  friend bool operator==(const Soft&, const Soft&) = default;
};
}  // namespace rule

using PdaRule = std::variant<rule::Gumbel, rule::InverseSampling, rule::PermuteReweight, rule::Beta,
                             rule::Soft>;

/// Accepts `gumbel`, `inverse`, `pr`, `beta:0.2`, `soft:delta=1.0,gamma=0.5`.
PdaRule parse_rule(std::string_view text);
std::string to_string(const PdaRule& rule);
/// Short family name: gumbel, inverse, pr, beta, soft.
std::string rule_family(const PdaRule& rule);
/// The rule's scalar parameter (beta or delta); 0 for parameterless rules.
double rule_param(const PdaRule& rule);
/// Throws InvalidArgument when parameters fall outside their ranges.
void validate(const PdaRule& rule);
[[nodiscard]] bool is_dirac_rule(const PdaRule& rule);

TokenId apply_gumbel(const TokenDistribution& p, const Digest& digest);

/// Smallest m whose cumulative mass exceeds r (left-closed intervals).
TokenId inverse_select(const TokenDistribution& p, double r);
TokenId apply_inverse(const TokenDistribution& p, const Digest& digest);

TokenDistribution apply_permute_reweight(const TokenDistribution& p, const Permutation& perm);

/// Mixture of permute-reweight and its mirror image, computed from forward
/// and reverse cumulative sums in permutation order.
TokenDistribution apply_beta(const TokenDistribution& p, const Permutation& perm, double beta);

/// Same rule computed from interval geometry: the part of each token's
/// permuted interval below 1/2 is scaled by 2*beta, the part above by
/// 2*(1-beta).
TokenDistribution apply_beta_intervals(const TokenDistribution& p, const Permutation& perm,
                                       double beta);

class GreenSet {
 public:
  GreenSet(std::vector<bool> mask, std::size_t count) : mask_(std::move(mask)), count_(count) {}
  [[nodiscard]] bool contains(TokenId t) const { return t < mask_.size() && mask_[t]; }
  [[nodiscard]] std::size_t size() const { return count_; }
  [[nodiscard]] std::size_t vocab_size() const { return mask_.size(); }
  [[nodiscard]] std::vector<TokenId> tokens() const;

 private:
  std::vector<bool> mask_;
  std::size_t count_;
};

/// Number of green tokens for vocabulary size n: floor(gamma * n).
std::size_t green_count(std::size_t n, double gamma);
/// The first floor(gamma * n) tokens of derive_permutation(digest, n).
GreenSet green_set(const Digest& digest, std::size_t n, double gamma);
TokenDistribution apply_soft(const TokenDistribution& p, const GreenSet& green, double delta);

/// Result of applying a rule: a selected token (Dirac rules) or a
/// distribution still to be sampled.
using RuleOutcome = std::variant<TokenId, TokenDistribution>;

RuleOutcome apply_rule(const PdaRule& rule, const TokenDistribution& p, const Digest& digest);
RuleOutcome apply_rule(const PdaRule& rule, const TokenDistribution& p, const WatermarkKey& key);

/// One-hot view of a Dirac outcome; distributions pass through.
TokenDistribution outcome_distribution(const RuleOutcome& outcome, std::size_t n);

}  // namespace wmkit
