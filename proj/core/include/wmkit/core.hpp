#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "wmkit/errors.hpp"

namespace wmkit {

/// Token ids are 0-based positions in the vocabulary.
using TokenId = std::uint32_t;

/// Sum tolerance accepted on externally supplied distributions.
inline constexpr double kInputSumTolerance = 1e-9;
/// Sum tolerance the toolkit holds its own outputs to.
inline constexpr double kOutputSumTolerance = 1e-12;

class Vocabulary {
 public:
  explicit Vocabulary(std::size_t size);
  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] bool contains(TokenId t) const { return t < size_; }
  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  std::size_t size_;
};

/// Probability vector over a vocabulary. Immutable once constructed.
class TokenDistribution {
 public:
  /// Validates nonnegativity and that the entries sum to one within
  /// `tolerance`. Throws InvalidDistribution otherwise.
  static TokenDistribution from_probs(std::vector<double> probs,
                                      double tolerance = kInputSumTolerance);
  static TokenDistribution dirac(std::size_t n, TokenId t);
  static TokenDistribution uniform(std::size_t n);

  [[nodiscard]] std::span<const double> probs() const { return probs_; }
  [[nodiscard]] std::size_t size() const { return probs_.size(); }
  [[nodiscard]] double operator[](TokenId t) const { return probs_[t]; }
  [[nodiscard]] double max_prob() const;
  [[nodiscard]] TokenId argmax() const;
  /// True when a single token carries all the mass.
  [[nodiscard]] bool is_dirac() const { return max_prob() == 1.0; }

  friend bool operator==(const TokenDistribution&, const TokenDistribution&) = default;

 private:
  explicit TokenDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}
  std::vector<double> probs_;
};

class TokenSequence {
 public:
  TokenSequence(std::vector<TokenId> tokens, std::size_t vocab_size);

  [[nodiscard]] std::span<const TokenId> tokens() const { return tokens_; }
  [[nodiscard]] std::size_t size() const { return tokens_.size(); }
  [[nodiscard]] bool empty() const { return tokens_.empty(); }
  [[nodiscard]] std::size_t vocab_size() const { return vocab_size_; }
  [[nodiscard]] TokenId operator[](std::size_t i) const { return tokens_[i]; }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;

 private:
  std::vector<TokenId> tokens_;
  std::size_t vocab_size_;
};

/// Scales a nonnegative vector to sum to one.
TokenDistribution normalize(std::span<const double> raw);

/// 1 - sum_t min(p_t, q_t).
double total_variation(const TokenDistribution& p, const TokenDistribution& q);

}  // namespace wmkit
