#include "wmkit/permutation.hpp"

#include <algorithm>
#include <numeric>

namespace wmkit {

Permutation Permutation::from_order(std::vector<TokenId> order) {
  if (order.empty()) throw EmptyVocabulary("permutation of an empty vocabulary");
  std::vector<std::size_t> rank(order.size(), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const TokenId t = order[pos];
    if (t >= order.size() || rank[t] != 0) {
      throw InvalidArgument("permutation order is not a bijection");
    }
    rank[t] = pos + 1;
  }
  return Permutation(std::move(order), std::move(rank));
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<TokenId> order(n);
  std::iota(order.begin(), order.end(), TokenId{0});
  return from_order(std::move(order));
}

Permutation Permutation::reversed() const {
  std::vector<TokenId> order(order_.rbegin(), order_.rend());
  return from_order(std::move(order));
}

}  // namespace wmkit
