#include "wmkit/toylm.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include <boost/math/special_functions/gamma.hpp>

#include "wmkit/keying.hpp"
#include "wmkit/numeric.hpp"

namespace wmkit::harness {
namespace {

// Beyond this many cached contexts new conditionals are recomputed on demand.
constexpr std::size_t kCacheCapacity = 1u << 18;

void put_be(std::string& out, std::uint64_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

}  // namespace

struct ToyLM::Cache {
  std::shared_mutex mutex;
  std::unordered_map<std::string, TokenDistribution> entries;
};

ToyLM::ToyLM(std::size_t vocab_size, std::size_t order, double concentration, std::uint64_t model_seed)
    : vocab_size_(vocab_size),
      order_(order),
      concentration_(concentration),
      model_seed_(model_seed),
      cache_(std::make_unique<Cache>()) {
  if (vocab_size < 2) throw InvalidArgument("toy model needs a vocabulary of at least 2 tokens");
  if (!(concentration > 0.0) || !std::isfinite(concentration)) {
    throw InvalidArgument("toy model concentration must be positive");
  }
}

ToyLM::~ToyLM() = default;
ToyLM::ToyLM(ToyLM&&) noexcept = default;
ToyLM& ToyLM::operator=(ToyLM&&) noexcept = default;

TokenDistribution ToyLM::next(std::span<const TokenId> context) const {
  const std::size_t take = std::min(order_, context.size());
  const auto key_tokens = context.subspan(context.size() - take, take);

  std::string material = "wmkit-toylm";
  put_be(material, model_seed_, 8);
  put_be(material, key_tokens.size(), 4);
  for (TokenId t : key_tokens) {
    if (t >= vocab_size_) throw InvalidArgument("context token outside the model vocabulary");
    put_be(material, t, 4);
  }
  {
    std::shared_lock lock(cache_->mutex);
    if (auto it = cache_->entries.find(material); it != cache_->entries.end()) return it->second;
  }
  TokenDistribution d = draw(key_tokens);
  std::unique_lock lock(cache_->mutex);
  if (cache_->entries.size() < kCacheCapacity) cache_->entries.emplace(std::move(material), d);
  return d;
}

TokenDistribution ToyLM::draw(std::span<const TokenId> key) const {
  std::string material = "wmkit-toylm";
  put_be(material, model_seed_, 8);
  put_be(material, key.size(), 4);
  for (TokenId t : key) put_be(material, t, 4);
  UniformStream stream(sha256(material));

  constexpr double kTiny = 0x1.0p-64;
  std::vector<double> log_gamma(vocab_size_);
  const double a = concentration_;
  for (double& lg : log_gamma) {
    if (a >= 1.0) {
      const double u = std::clamp(stream.next(), kTiny, 1.0 - 0x1.0p-53);
      lg = std::log(boost::math::gamma_p_inv(a, u));
    } else {
      const double u1 = std::clamp(stream.next(), kTiny, 1.0 - 0x1.0p-53);
      const double u2 = std::clamp(stream.next(), kTiny, 1.0);
      lg = std::log(boost::math::gamma_p_inv(a + 1.0, u1)) + std::log(u2) / a;
    }
  }
  const double top = *std::max_element(log_gamma.begin(), log_gamma.end());
  std::vector<double> w(vocab_size_);
  for (std::size_t j = 0; j < vocab_size_; ++j) w[j] = std::exp(log_gamma[j] - top);
  return normalize(w);
}

double ToyLM::mean_log_prob(std::span<const TokenId> prompt, std::span<const TokenId> response) const {
  if (response.empty()) return 0.0;
  std::vector<TokenId> context(prompt.begin(), prompt.end());
  context.reserve(prompt.size() + response.size());
  CompensatedSum total;
  for (TokenId t : response) {
    const TokenDistribution p = next(context);
    total.add(std::log(p[t]));
    context.push_back(t);
  }
  return total.value() / static_cast<double>(response.size());
}

ToyLM build_toylm(std::size_t vocab_size, std::size_t order, double concentration, std::uint64_t model_seed) {
  return ToyLM(vocab_size, order, concentration, model_seed);
}

double entropy(const TokenDistribution& p) {
  CompensatedSum h;
  for (double x : p.probs()) {
    if (x > 0.0) h.add(-x * std::log(x));
  }
  return h.value();
}

}  // namespace wmkit::harness
