#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wmkit/core.hpp"

namespace wmkit {

/// Bijection between token ids and ranks 1..N.
///
/// `rank(t)` is the 1-based position of token t in the permuted order and
/// `token_at(r)` is its inverse. Ranks are 1-based so that rank/N reaches 1
/// for the last token in the order.
class Permutation {
 public:
  /// `order[pos]` is the token placed at 0-based position `pos`.
  /// Throws InvalidArgument if `order` is not a bijection on 0..N-1.
  static Permutation from_order(std::vector<TokenId> order);
  static Permutation identity(std::size_t n);

  [[nodiscard]] std::size_t size() const { return order_.size(); }
  [[nodiscard]] std::size_t rank(TokenId t) const { return rank_[t]; }
  [[nodiscard]] TokenId token_at(std::size_t rank) const { return order_[rank - 1]; }
  [[nodiscard]] std::span<const TokenId> order() const { return order_; }
  [[nodiscard]] Permutation reversed() const;

  friend bool operator==(const Permutation& a, const Permutation& b) { return a.order_ == b.order_; }

 private:
  Permutation(std::vector<TokenId> order, std::vector<std::size_t> rank)
      : order_(std::move(order)), rank_(std::move(rank)) {}
  std::vector<TokenId> order_;
  std::vector<std::size_t> rank_;
};

}  // namespace wmkit
