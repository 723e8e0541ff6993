#include "wmkit/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wmkit/numeric.hpp"

namespace wmkit {

Vocabulary::Vocabulary(std::size_t size) : size_(size) {
  if (size == 0) throw EmptyVocabulary("vocabulary must contain at least one token");
}

TokenDistribution TokenDistribution::from_probs(std::vector<double> probs, double tolerance) {
  if (probs.empty()) throw InvalidDistribution("distribution over an empty vocabulary");
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!std::isfinite(probs[i]) || probs[i] < 0.0) {
      throw InvalidDistribution("entry " + std::to_string(i) + " is negative or not finite");
    }
  }
  const double total = compensated_total(probs);
  if (std::abs(total - 1.0) > tolerance) {
    throw InvalidDistribution("entries sum to " + std::to_string(total) + ", expected 1");
  }
  return TokenDistribution(std::move(probs));
}

TokenDistribution TokenDistribution::dirac(std::size_t n, TokenId t) {
  if (n == 0) throw EmptyVocabulary("dirac over an empty vocabulary");
  if (t >= n) throw InvalidArgument("dirac token out of range");
  std::vector<double> probs(n, 0.0);
  probs[t] = 1.0;
  return TokenDistribution(std::move(probs));
}

TokenDistribution TokenDistribution::uniform(std::size_t n) {
  if (n == 0) throw EmptyVocabulary("uniform over an empty vocabulary");
  return TokenDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

double TokenDistribution::max_prob() const {
  return *std::max_element(probs_.begin(), probs_.end());
}

TokenId TokenDistribution::argmax() const {
  return static_cast<TokenId>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

TokenSequence::TokenSequence(std::vector<TokenId> tokens, std::size_t vocab_size)
    : tokens_(std::move(tokens)), vocab_size_(vocab_size) {
  if (vocab_size_ == 0) throw EmptyVocabulary("token sequence over an empty vocabulary");
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i] >= vocab_size_) {
      throw InvalidArgument("token id " + std::to_string(tokens_[i]) + " at position " +
                            std::to_string(i) + " outside vocabulary of size " +
                            std::to_string(vocab_size_));
    }
  }
}

TokenDistribution normalize(std::span<const double> raw) {
  if (raw.empty()) throw InvalidDistribution("cannot normalize an empty vector");
  CompensatedSum total;
  for (double x : raw) {
    if (!std::isfinite(x) || x < 0.0) throw InvalidDistribution("negative or non-finite entry");
    total.add(x);
  }
  const double sum = total.value();
  if (sum <= 0.0) throw InvalidDistribution("all-zero vector cannot be normalized");
  std::vector<double> probs(raw.begin(), raw.end());
  for (double& x : probs) x /= sum;
  return TokenDistribution::from_probs(std::move(probs), kOutputSumTolerance);
}

double total_variation(const TokenDistribution& p, const TokenDistribution& q) {
  if (p.size() != q.size()) {
    throw DimensionMismatch("total_variation: sizes " + std::to_string(p.size()) + " and " +
                            std::to_string(q.size()));
  }
  CompensatedSum overlap;
  for (std::size_t t = 0; t < p.size(); ++t) overlap.add(std::min(p.probs()[t], q.probs()[t]));
  return std::clamp(1.0 - overlap.value(), 0.0, 1.0);
}

}  // namespace wmkit
