#pragma once

// Watermark keys and all key-derived pseudo-randomness.
//
// Key encoding (normative, big-endian throughout):
//
//   tag (1 byte)   0x01 n-gram | 0x02 position | 0x03 fixed index
//   secret         128 bytes
//   payload        n-gram:          u32 count, then count x u32 token id
//                  position/fixed:  u64 index
//
// key digest      = SHA-256(encoding)
// stream block i  = SHA-256(digest || u64 i), i = 0, 1, 2, ...
// variate         = each 8-byte big-endian chunk c of each block, in order,
//                   mapped to (c >> 11) * 2^-53, i.e. c / 2^64 truncated to
//                   double precision so the result stays in [0, 1).
// permutation     = Fisher-Yates over the identity: for j = n-1 down to 1,
//                   k = min(floor(u * (j + 1)), j) with u the next variate,
//                   swap(order[j], order[k]).

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <variant>
#include <vector>

#include "wmkit/core.hpp"
#include "wmkit/permutation.hpp"

namespace wmkit {

inline constexpr std::size_t kSecretKeyBytes = 128;
inline constexpr std::size_t kDigestBytes = 32;

inline constexpr std::size_t kDefaultNgram = 5;
inline constexpr std::uint64_t kDefaultFixedKeySet = 256;
inline constexpr std::uint64_t kDefaultPositionCap = 4096;

class SecretKey {
 public:
  using Bytes = std::array<std::uint8_t, kSecretKeyBytes>;

  SecretKey() : bytes_{} {}
  explicit SecretKey(const Bytes& bytes) : bytes_(bytes) {}

  /// Parses exactly 256 hex characters.
  static SecretKey from_hex(std::string_view hex);
  /// Deterministic key expanded from a 64-bit seed via the SHA-256 stream.
  static SecretKey from_seed(std::uint64_t seed);

  [[nodiscard]] std::string to_hex() const;
  [[nodiscard]] std::span<const std::uint8_t, kSecretKeyBytes> bytes() const { return bytes_; }

  friend bool operator==(const SecretKey&, const SecretKey&) = default;

 private:
  Bytes bytes_;
};

struct NGramContext {
  std::vector<TokenId> tokens;
  friend bool operator==(const NGramContext&, const NGramContext&) = default;
};
struct PositionContext {
  std::uint64_t index = 0;
  friend bool operator==(const PositionContext&, const PositionContext&) = default;
};
struct FixedIndexContext {
  std::uint64_t index = 0;
  friend bool operator==(const FixedIndexContext&, const FixedIndexContext&) = default;
};

using ContextKey = std::variant<NGramContext, PositionContext, FixedIndexContext>;

struct WatermarkKey {
  SecretKey secret;
  ContextKey context;
  friend bool operator==(const WatermarkKey&, const WatermarkKey&) = default;
};

class Digest {
 public:
  using Bytes = std::array<std::uint8_t, kDigestBytes>;
  Digest() : bytes_{} {}
  explicit Digest(const Bytes& bytes) : bytes_(bytes) {}

  [[nodiscard]] std::span<const std::uint8_t, kDigestBytes> bytes() const { return bytes_; }
  [[nodiscard]] std::string hex() const;
  static Digest from_hex(std::string_view hex);

  friend bool operator==(const Digest&, const Digest&) = default;

 private:
  Bytes bytes_;
};

Digest sha256(std::span<const std::uint8_t> data);
Digest sha256(std::string_view text);

/// Context tag and payload only; the per-generation history key.
std::vector<std::uint8_t> encode_context(const ContextKey& context);
std::vector<std::uint8_t> encode_key(const WatermarkKey& key);
Digest key_digest(const WatermarkKey& key);

/// SHA-256(digest || u64 index): block `index` of the stream seeded by
/// `digest`. Also used to derive families of independent digests.
Digest stream_block(const Digest& digest, std::uint64_t index);

/// Computes key digests for one secret key without re-hashing the secret
/// for every context. Produces the same digests as key_digest.
class KeyHasher {
 public:
  explicit KeyHasher(const SecretKey& secret);
  ~KeyHasher();
  KeyHasher(KeyHasher&&) noexcept;
  KeyHasher& operator=(KeyHasher&&) noexcept;
  KeyHasher(const KeyHasher&) = delete;
  KeyHasher& operator=(const KeyHasher&) = delete;

  [[nodiscard]] Digest digest(const ContextKey& context) const;
  [[nodiscard]] Digest ngram_digest(std::span<const TokenId> context_tokens) const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// Counter-mode SHA-256 uniform stream. A value-typed cursor.
class UniformStream {
 public:
  explicit UniformStream(const Digest& digest) : digest_(digest) {}

  std::uint64_t next_u64();
  double next() { return unit_interval_of(next_u64()); }

  static double unit_interval_of(std::uint64_t chunk);

 private:
  void refill();
  Digest digest_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint64_t, 4> chunks_{};
  std::size_t cursor_ = 4;
};

double derive_uniform(const Digest& digest);
Permutation derive_permutation(const Digest& digest, std::size_t n);
/// Rank of `token` under derive_permutation(digest, n), without materializing
/// the permutation. Stops consuming the stream once the token's slot is fixed.
std::size_t derive_rank(const Digest& digest, std::size_t n, TokenId token);

/// -ln(-ln u) with u clamped to [2^-64, 1 - 2^-16].
double gumbel_from_uniform(double u);
std::vector<double> derive_gumbel(const Digest& digest, std::size_t n);

/// Context is the last min(a, len(prefix)) tokens.
WatermarkKey ngram_key(const SecretKey& secret, std::span<const TokenId> prefix, std::size_t a);
WatermarkKey ngram_key(const SecretKey& secret, const TokenSequence& prefix, std::size_t a);
WatermarkKey position_key(const SecretKey& secret, std::uint64_t i);
/// FixedIndex((i + r) mod n0) while i < n0; empty once the key set is exhausted.
std::optional<WatermarkKey> fixed_set_key(const SecretKey& secret, std::uint64_t n0,
                                          std::uint64_t i, std::uint64_t r);

/// Serialized context keys seen during one generation.
class KeyHistory {
 public:
  /// Returns false if the context was already present.
  bool insert(const ContextKey& context);
  [[nodiscard]] bool contains(const ContextKey& context) const;
  [[nodiscard]] std::size_t size() const { return seen_.size(); }
  void clear() { seen_.clear(); }

 private:
  static std::string serialize(const ContextKey& context);
  std::unordered_set<std::string> seen_;
};

}  // namespace wmkit
