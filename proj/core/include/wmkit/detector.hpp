#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wmkit/core.hpp"
#include "wmkit/keying.hpp"

namespace wmkit {

/// Default sigmoid scale C for the rank score.
inline constexpr double kDefaultScale = 10.0;

struct DetectionResult {
  /// Sum of per-position scores (green count for the soft detector).
  double raw_sum = 0.0;
  /// raw_sum minus its null expectation.
  double centered = 0.0;
  /// Standardized statistic compared against the threshold.
  double z = 0.0;
  /// Null tail bound at z: exp(-2 z^2) for the rank detector, the normal
  /// upper tail for the soft detector.
  double p_bound = 1.0;
  std::size_t scored_count = 0;
  double threshold = 0.0;
  bool decision = false;
};

/// sigmoid(C * (rank / n - 1/2)), rank in 1..n.
double beta_score(std::size_t rank, std::size_t n, double scale);

/// Null expectation of beta_score when the rank is uniform on 1..n.
double null_mean(std::size_t n, double scale);

/// Threshold z whose Hoeffding bound exp(-2 z^2) equals alpha.
double z_for_fpr(double alpha);

/// min(1, exp(-2 z^2)) for z >= 0, 1 otherwise.
double p_value_bound(double z);

/// False positive rate of max-over-M-keys detection: 1 - (1 - p0)^M.
double multikey_fpr(double p0, std::size_t keys);

/// Model-agnostic rank detector for beta-reweighted text.
///
/// Positions 2..n are scored; position i uses the n-gram key built from the
/// previous min(a, i-1) tokens. With `dedup`, positions whose context key
/// already occurred in the text are skipped.
class BetaDetector {
 public:
  BetaDetector(const SecretKey& secret, std::size_t vocab_size, std::size_t a = kDefaultNgram,
               double scale = kDefaultScale, bool dedup = false);

  [[nodiscard]] DetectionResult detect(const TokenSequence& text, double threshold) const;
  [[nodiscard]] std::size_t vocab_size() const { return vocab_size_; }

 private:
  KeyHasher hasher_;
  std::size_t vocab_size_;
  std::size_t a_;
  double scale_;
  bool dedup_;
  double null_mean_;
};

/// Green-list count detector for the soft baseline:
/// z = (g - gamma m) / sqrt(m gamma (1 - gamma)).
class SoftDetector {
 public:
  SoftDetector(const SecretKey& secret, std::size_t vocab_size, std::size_t a = kDefaultNgram,
               double gamma = 0.5, bool dedup = false);

  [[nodiscard]] DetectionResult detect(const TokenSequence& text, double threshold) const;

 private:
  KeyHasher hasher_;
  std::size_t vocab_size_;
  std::size_t a_;
  double gamma_;
  bool dedup_;
  std::size_t green_count_;
};

DetectionResult detect_beta(const TokenSequence& text, const SecretKey& secret, std::size_t a,
                            double scale, double threshold, bool dedup = false);

DetectionResult detect_soft(const TokenSequence& text, const SecretKey& secret, std::size_t a,
                            double gamma, double threshold, bool dedup = false);

struct MultiKeyResult {
  double max_z = 0.0;
  std::size_t best_index = 0;
  std::vector<DetectionResult> per_key;
};

/// Runs the rank detector under every key and keeps the largest z.
MultiKeyResult detect_multikey(const TokenSequence& text, std::span<const SecretKey> secrets,
                               std::size_t a, double scale, double threshold = 0.0);

}  // namespace wmkit
