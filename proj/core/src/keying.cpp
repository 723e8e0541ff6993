#include "wmkit/keying.hpp"

#define OPENSSL_SUPPRESS_DEPRECATED
#include <openssl/sha.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "wmkit/numeric.hpp"

namespace wmkit {
namespace {

constexpr std::uint8_t kTagNGram = 0x01;
constexpr std::uint8_t kTagPosition = 0x02;
constexpr std::uint8_t kTagFixedIndex = 0x03;

constexpr char kHexDigits[] = "0123456789abcdef";

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

template <std::size_t N>
std::array<std::uint8_t, N> parse_hex(std::string_view hex, const char* what) {
  if (hex.size() != 2 * N) {
    throw InvalidArgument(std::string(what) + ": expected " + std::to_string(2 * N) +
                          " hex characters, got " + std::to_string(hex.size()));
  }
  std::array<std::uint8_t, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    const int hi = hex_value(hex[2 * i]);
    const int lo = hex_value(hex[2 * i + 1]);
    if (hi < 0 || lo < 0) throw InvalidArgument(std::string(what) + ": invalid hex character");
    out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
  }
  return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out.push_back(kHexDigits[b >> 4]);
    out.push_back(kHexDigits[b & 0x0f]);
  }
  return out;
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_be64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

void put_be64(std::uint8_t* out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(v >> (56 - 8 * i));
}

std::uint64_t get_be64(const std::uint8_t* in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | in[i];
  return v;
}

std::uint8_t context_tag(const ContextKey& context) {
  switch (context.index()) {
    case 0: return kTagNGram;
    case 1: return kTagPosition;
    default: return kTagFixedIndex;
  }
}

void append_payload(std::vector<std::uint8_t>& out, const ContextKey& context) {
  std::visit(
      [&out](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, NGramContext>) {
          put_be32(out, static_cast<std::uint32_t>(c.tokens.size()));
          for (TokenId t : c.tokens) put_be32(out, t);
        } else {
          put_be64(out, c.index);
        }
      },
      context);
}

Digest finish(SHA256_CTX& ctx) {
  Digest::Bytes bytes{};
  SHA256_Final(bytes.data(), &ctx);
  return Digest(bytes);
}

}  // namespace

SecretKey SecretKey::from_hex(std::string_view hex) {
  return SecretKey(parse_hex<kSecretKeyBytes>(hex, "secret key"));
}

SecretKey SecretKey::from_seed(std::uint64_t seed) {
  std::vector<std::uint8_t> material{'w', 'm', 'k', 'i', 't', '-', 's', 'k'};
  put_be64(material, seed);
  const Digest root = sha256(material);
  Bytes bytes{};
  for (std::uint64_t block = 0; block < kSecretKeyBytes / kDigestBytes; ++block) {
    const Digest d = stream_block(root, block);
    std::copy(d.bytes().begin(), d.bytes().end(), bytes.begin() + block * kDigestBytes);
  }
  return SecretKey(bytes);
}

std::string SecretKey::to_hex() const { return wmkit::to_hex(bytes_); }

std::string Digest::hex() const { return wmkit::to_hex(bytes_); }

Digest Digest::from_hex(std::string_view hex) { return Digest(parse_hex<kDigestBytes>(hex, "digest")); }

Digest sha256(std::span<const std::uint8_t> data) {
  SHA256_CTX ctx;
  SHA256_Init(&ctx);
  SHA256_Update(&ctx, data.data(), data.size());
  return finish(ctx);
}

Digest sha256(std::string_view text) {
  return sha256(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()),
                                              text.size()));
}

std::vector<std::uint8_t> encode_context(const ContextKey& context) {
  std::vector<std::uint8_t> out;
  out.push_back(context_tag(context));
  append_payload(out, context);
  return out;
}

std::vector<std::uint8_t> encode_key(const WatermarkKey& key) {
  std::vector<std::uint8_t> out;
  out.reserve(1 + kSecretKeyBytes + 8);
  out.push_back(context_tag(key.context));
  out.insert(out.end(), key.secret.bytes().begin(), key.secret.bytes().end());
  append_payload(out, key.context);
  return out;
}

Digest key_digest(const WatermarkKey& key) { return sha256(encode_key(key)); }

Digest stream_block(const Digest& digest, std::uint64_t index) {
  std::array<std::uint8_t, kDigestBytes + 8> buf{};
  std::copy(digest.bytes().begin(), digest.bytes().end(), buf.begin());
  put_be64(buf.data() + kDigestBytes, index);
  return sha256(std::span<const std::uint8_t>(buf));
}

// Midstates after absorbing tag || secret, one per context tag.
struct KeyHasher::State {
  std::array<SHA256_CTX, 3> prefix;
};

KeyHasher::KeyHasher(const SecretKey& secret) : state_(std::make_unique<State>()) {
  const std::array<std::uint8_t, 3> tags{kTagNGram, kTagPosition, kTagFixedIndex};
  for (std::size_t i = 0; i < tags.size(); ++i) {
    SHA256_CTX& ctx = state_->prefix[i];
    SHA256_Init(&ctx);
    SHA256_Update(&ctx, &tags[i], 1);
    SHA256_Update(&ctx, secret.bytes().data(), kSecretKeyBytes);
  }
}

KeyHasher::~KeyHasher() = default;
KeyHasher::KeyHasher(KeyHasher&&) noexcept = default;
KeyHasher& KeyHasher::operator=(KeyHasher&&) noexcept = default;

Digest KeyHasher::digest(const ContextKey& context) const {
  SHA256_CTX ctx = state_->prefix[context.index()];
  std::vector<std::uint8_t> payload;
  append_payload(payload, context);
  SHA256_Update(&ctx, payload.data(), payload.size());
  return finish(ctx);
}

Digest KeyHasher::ngram_digest(std::span<const TokenId> context_tokens) const {
  SHA256_CTX ctx = state_->prefix[0];
  std::array<std::uint8_t, 4> word{};
  auto put = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) word[i] = static_cast<std::uint8_t>(v >> (24 - 8 * i));
    SHA256_Update(&ctx, word.data(), word.size());
  };
  put(static_cast<std::uint32_t>(context_tokens.size()));
  for (TokenId t : context_tokens) put(t);
  return finish(ctx);
}

double UniformStream::unit_interval_of(std::uint64_t chunk) { return unit_interval(chunk); }

void UniformStream::refill() {
  const Digest block = stream_block(digest_, block_index_++);
  for (std::size_t i = 0; i < chunks_.size(); ++i) chunks_[i] = get_be64(block.bytes().data() + 8 * i);
  cursor_ = 0;
}

std::uint64_t UniformStream::next_u64() {
  if (cursor_ == chunks_.size()) refill();
  return chunks_[cursor_++];
}

double derive_uniform(const Digest& digest) { return UniformStream(digest).next(); }

namespace {
std::size_t draw_index(UniformStream& stream, std::size_t j) {
  const double u = stream.next();
  const auto k = static_cast<std::size_t>(std::floor(u * static_cast<double>(j + 1)));
  return std::min(k, j);
}
}  // namespace

Permutation derive_permutation(const Digest& digest, std::size_t n) {
  if (n == 0) throw EmptyVocabulary("derive_permutation: n must be at least 1");
  std::vector<TokenId> order(n);
  std::iota(order.begin(), order.end(), TokenId{0});
  UniformStream stream(digest);
  for (std::size_t j = n - 1; j >= 1; --j) {
    const std::size_t k = draw_index(stream, j);
    std::swap(order[j], order[k]);
  }
  return Permutation::from_order(std::move(order));
}

std::size_t derive_rank(const Digest& digest, std::size_t n, TokenId token) {
  if (n == 0) throw EmptyVocabulary("derive_rank: n must be at least 1");
  if (token >= n) throw InvalidArgument("derive_rank: token outside vocabulary");
  std::size_t pos = token;
  UniformStream stream(digest);
  for (std::size_t j = n - 1; j >= 1; --j) {
    const std::size_t k = draw_index(stream, j);
    if (pos == k) {
      pos = j;
    } else if (pos == j) {
      pos = k;
    }
    // Slot j is final after step j.
    if (pos == j) return j + 1;
  }
  return pos + 1;
}

double gumbel_from_uniform(double u) {
  constexpr double lo = 0x1.0p-64;
  constexpr double hi = 1.0 - 0x1.0p-16;
  u = std::clamp(u, lo, hi);
  return -std::log(-std::log(u));
}

std::vector<double> derive_gumbel(const Digest& digest, std::size_t n) {
  if (n == 0) throw EmptyVocabulary("derive_gumbel: n must be at least 1");
  std::vector<double> g(n);
  UniformStream stream(digest);
  for (double& x : g) x = gumbel_from_uniform(stream.next());
  return g;
}

WatermarkKey ngram_key(const SecretKey& secret, std::span<const TokenId> prefix, std::size_t a) {
  if (a == 0) throw InvalidArgument("ngram_key: a must be at least 1");
  const std::size_t take = std::min(a, prefix.size());
  NGramContext ctx{std::vector<TokenId>(prefix.end() - static_cast<std::ptrdiff_t>(take), prefix.end())};
  return WatermarkKey{secret, std::move(ctx)};
}

WatermarkKey ngram_key(const SecretKey& secret, const TokenSequence& prefix, std::size_t a) {
  return ngram_key(secret, prefix.tokens(), a);
}

WatermarkKey position_key(const SecretKey& secret, std::uint64_t i) {
  return WatermarkKey{secret, PositionContext{i}};
}

std::optional<WatermarkKey> fixed_set_key(const SecretKey& secret, std::uint64_t n0,
                                          std::uint64_t i, std::uint64_t r) {
  if (n0 == 0) throw InvalidArgument("fixed_set_key: n0 must be at least 1");
  if (i >= n0) return std::nullopt;
  return WatermarkKey{secret, FixedIndexContext{(i + r % n0) % n0}};
}

std::string KeyHistory::serialize(const ContextKey& context) {
  const auto bytes = encode_context(context);
  return std::string(bytes.begin(), bytes.end());
}

bool KeyHistory::insert(const ContextKey& context) { return seen_.insert(serialize(context)).second; }

bool KeyHistory::contains(const ContextKey& context) const {
  return seen_.contains(serialize(context));
}

}  // namespace wmkit
