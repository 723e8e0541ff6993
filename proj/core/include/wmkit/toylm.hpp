#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>

#include "wmkit/generator.hpp"

namespace wmkit::harness {

/// Order-c Markov language model with Dirichlet(alpha) conditionals.
///
/// The conditional for a context (its last min(c, len) tokens) is drawn
/// lazily and deterministically: the SHA-256 stream seeded by
/// SHA-256("wmkit-toylm" || u64 model_seed || u32 count || u32 tokens...)
/// supplies uniforms u_j, turned into Gamma(alpha) variates by inversion of
/// the regularized incomplete gamma function, then normalized. For
/// alpha < 1 each token consumes two uniforms and uses
/// Gamma(alpha) = Gamma(alpha + 1) * U^(1/alpha) in log space so that tiny
/// concentrations do not underflow.
class ToyLM final : public NextTokenModel {
 public:
  ToyLM(std::size_t vocab_size, std::size_t order, double concentration, std::uint64_t model_seed);
  ~ToyLM() override;
  ToyLM(ToyLM&&) noexcept;
  ToyLM& operator=(ToyLM&&) noexcept;

  [[nodiscard]] std::size_t vocab_size() const override { return vocab_size_; }
  [[nodiscard]] TokenDistribution next(std::span<const TokenId> context) const override;

  [[nodiscard]] std::size_t order() const { return order_; }
  [[nodiscard]] double concentration() const { return concentration_; }
  [[nodiscard]] std::uint64_t model_seed() const { return model_seed_; }

  /// Mean natural-log probability of `response` continuing `prompt`.
  [[nodiscard]] double mean_log_prob(std::span<const TokenId> prompt, std::span<const TokenId> response) const;

 private:
  [[nodiscard]] TokenDistribution draw(std::span<const TokenId> key) const;

  std::size_t vocab_size_;
  std::size_t order_;
  double concentration_;
  std::uint64_t model_seed_;
  struct Cache;
  std::unique_ptr<Cache> cache_;
};

/// Validates parameters (N >= 2, alpha > 0) and builds the model.
ToyLM build_toylm(std::size_t vocab_size, std::size_t order, double concentration, std::uint64_t model_seed);

/// Shannon entropy in nats.
double entropy(const TokenDistribution& p);

}  // namespace wmkit::harness
