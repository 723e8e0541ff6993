#include "wmkit/detector.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wmkit/numeric.hpp"
#include "wmkit/pda.hpp"
#include "wmkit/stats.hpp"

namespace wmkit {
namespace {

void require_scorable(const TokenSequence& text, std::size_t vocab_size) {
  if (text.size() < 2) throw TooShort("detection needs at least 2 tokens, got " + std::to_string(text.size()));
  if (text.vocab_size() != vocab_size) {
    throw DimensionMismatch("text vocabulary " + std::to_string(text.vocab_size()) +
                            " differs from detector vocabulary " + std::to_string(vocab_size));
  }
}

// Calls fn(position, digest) for each scored position i = 1..n-1 (0-based).
template <typename Fn>
void for_each_scored(const TokenSequence& text, const KeyHasher& hasher, std::size_t a, bool dedup,
                     Fn&& fn) {
  const auto tokens = text.tokens();
  KeyHistory history;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const std::size_t take = std::min(a, i);
    const auto ctx = tokens.subspan(i - take, take);
    if (dedup && !history.insert(NGramContext{std::vector<TokenId>(ctx.begin(), ctx.end())})) continue;
    fn(i, hasher.ngram_digest(ctx));
  }
}

}  // namespace

double beta_score(std::size_t rank, std::size_t n, double scale) {
  if (n == 0 || rank < 1 || rank > n) {
    throw InvalidArgument("beta_score: rank " + std::to_string(rank) + " outside 1.." + std::to_string(n));
  }
  const double x = scale * (static_cast<double>(rank) / static_cast<double>(n) - 0.5);
  return 1.0 / (1.0 + std::exp(-x));
}

double null_mean(std::size_t n, double scale) {
  if (n == 0) throw InvalidArgument("null_mean: n must be at least 1");
  CompensatedSum s;
  for (std::size_t r = 1; r <= n; ++r) s.add(beta_score(r, n, scale));
  return s.value() / static_cast<double>(n);
}

double z_for_fpr(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidArgument("z_for_fpr: alpha must lie in (0, 1]");
  return std::sqrt(std::log(1.0 / alpha) / 2.0);
}

double p_value_bound(double z) {
  if (!(z >= 0.0)) return 1.0;
  return std::min(1.0, std::exp(-2.0 * z * z));
}

double multikey_fpr(double p0, std::size_t keys) {
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw InvalidArgument("multikey_fpr: p0 must lie in [0, 1]");
  if (keys == 0) throw InvalidArgument("multikey_fpr: need at least one key");
  return 1.0 - std::pow(1.0 - p0, static_cast<double>(keys));
}

BetaDetector::BetaDetector(const SecretKey& secret, std::size_t vocab_size, std::size_t a, double scale,
                           bool dedup)
    : hasher_(secret), vocab_size_(vocab_size), a_(a), scale_(scale), dedup_(dedup) {
  if (vocab_size == 0) throw EmptyVocabulary("detector over an empty vocabulary");
  if (a == 0) throw InvalidArgument("n-gram length must be at least 1");
  if (!(scale > 0.0)) throw InvalidArgument("score scale C must be positive");
  null_mean_ = null_mean(vocab_size, scale);
}

DetectionResult BetaDetector::detect(const TokenSequence& text, double threshold) const {
  require_scorable(text, vocab_size_);
  CompensatedSum sum;
  std::size_t m = 0;
  for_each_scored(text, hasher_, a_, dedup_, [&](std::size_t i, const Digest& d) {
    sum.add(beta_score(derive_rank(d, vocab_size_, text[i]), vocab_size_, scale_));
    ++m;
  });
  DetectionResult r;
  r.raw_sum = sum.value();
  r.scored_count = m;
  r.threshold = threshold;
  if (m > 0) {
    r.centered = r.raw_sum - static_cast<double>(m) * null_mean_;
    r.z = r.centered / std::sqrt(static_cast<double>(m));
  }
  r.p_bound = p_value_bound(r.z);
  r.decision = m > 0 && r.z > threshold;
  return r;
}

SoftDetector::SoftDetector(const SecretKey& secret, std::size_t vocab_size, std::size_t a, double gamma,
                           bool dedup)
    : hasher_(secret), vocab_size_(vocab_size), a_(a), gamma_(gamma), dedup_(dedup) {
  if (vocab_size == 0) throw EmptyVocabulary("detector over an empty vocabulary");
  if (a == 0) throw InvalidArgument("n-gram length must be at least 1");
  green_count_ = green_count(vocab_size, gamma);
}

DetectionResult SoftDetector::detect(const TokenSequence& text, double threshold) const {
  require_scorable(text, vocab_size_);
  std::size_t green = 0;
  std::size_t m = 0;
  for_each_scored(text, hasher_, a_, dedup_, [&](std::size_t i, const Digest& d) {
    // Green tokens are exactly those ranked within the first green_count_.
    if (derive_rank(d, vocab_size_, text[i]) <= green_count_) ++green;
    ++m;
  });
  DetectionResult r;
  r.raw_sum = static_cast<double>(green);
  r.scored_count = m;
  r.threshold = threshold;
  if (m > 0) {
    const double md = static_cast<double>(m);
    r.centered = r.raw_sum - gamma_ * md;
    r.z = r.centered / std::sqrt(md * gamma_ * (1.0 - gamma_));
  }
  r.p_bound = normal_upper_tail(r.z);
  r.decision = m > 0 && r.z > threshold;
  return r;
}

DetectionResult detect_beta(const TokenSequence& text, const SecretKey& secret, std::size_t a, double scale,
                            double threshold, bool dedup) {
  return BetaDetector(secret, text.vocab_size(), a, scale, dedup).detect(text, threshold);
}

DetectionResult detect_soft(const TokenSequence& text, const SecretKey& secret, std::size_t a, double gamma,
                            double threshold, bool dedup) {
  return SoftDetector(secret, text.vocab_size(), a, gamma, dedup).detect(text, threshold);
}

MultiKeyResult detect_multikey(const TokenSequence& text, std::span<const SecretKey> secrets, std::size_t a,
                               double scale, double threshold) {
  if (secrets.empty()) throw InvalidArgument("detect_multikey: need at least one secret key");
  MultiKeyResult out;
  out.per_key.reserve(secrets.size());
  for (std::size_t k = 0; k < secrets.size(); ++k) {
    out.per_key.push_back(detect_beta(text, secrets[k], a, scale, threshold));
    if (k == 0 || out.per_key.back().z > out.max_z) {
      out.max_z = out.per_key.back().z;
      out.best_index = k;
    }
  }
  return out;
}

}  // namespace wmkit
