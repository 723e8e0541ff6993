#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "wmkit/core.hpp"
#include "wmkit/keying.hpp"
#include "wmkit/pda.hpp"

namespace wmkit {

/// Source of next-token distributions. Implementations must be deterministic:
/// the same context always yields the same distribution.
class NextTokenModel {
 public:
  virtual ~NextTokenModel() = default;
  [[nodiscard]] virtual std::size_t vocab_size() const = 0;
  /// `context` is the prompt followed by every token generated so far.
  [[nodiscard]] virtual TokenDistribution next(std::span<const TokenId> context) const = 0;
};

namespace sampler {
struct NGram {
  std::size_t a = kDefaultNgram;
  friend bool operator==(const NGram&, const NGram&) = default;
};
/// Keys are the generation step index; steps at or beyond `cap` are left
/// unwatermarked.
struct Position {
  std::uint64_t cap = kDefaultPositionCap;
  friend bool operator==(const Position&, const Position&) = default;
};
struct FixedSet {
  std::uint64_t n0 = kDefaultFixedKeySet;
  friend bool operator==(const FixedSet&, const FixedSet&) = default;
};
}  // namespace sampler

using KeySampler = std::variant<sampler::NGram, sampler::Position, sampler::FixedSet>;

/// Accepts `ngram:5`, `position`, `position:4096`, `fixed:256`.
KeySampler parse_sampler(std::string_view text);
std::string to_string(const KeySampler& sampler);

/// Uniform true randomness for sampling adjusted distributions. Kept apart
/// from the key-derived SHA-256 stream. mt19937_64 output is fixed by the
/// standard; uniforms take its top 53 bits.
class SamplingRng {
 public:
  explicit SamplingRng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  TokenId sample(const TokenDistribution& p);
  std::uint64_t below(std::uint64_t bound);

 private:
  std::mt19937_64 engine_;
};

struct GeneratorConfig {
  PdaRule rule = rule::Beta{0.0};
  KeySampler sampler = sampler::NGram{};
  SecretKey secret;
  std::size_t max_len = 4096;
  std::uint64_t sampling_seed = 0;
  /// Keep pre/post distributions in the trace.
  bool retain_distributions = false;
};

struct TraceStep {
  TokenId token = 0;
  bool watermarked = false;
  /// Context key used at this step; empty when the key set was exhausted.
  std::optional<ContextKey> context;
  std::optional<TokenDistribution> pre;
  std::optional<TokenDistribution> post;
};

struct GenerationTrace {
  std::vector<TraceStep> steps;
  /// Fixed-key-set offset r drawn for this generation.
  std::optional<std::uint64_t> fixed_offset;
  [[nodiscard]] std::size_t watermarked_count() const;
};

struct Generation {
  TokenSequence tokens;
  GenerationTrace trace;
};

/// Generates exactly `n` tokens after `prompt`. A step whose context key was
/// already used in this generation, or whose fixed key set is exhausted, is
/// sampled from the raw model distribution and marked unwatermarked.
Generation generate(const NextTokenModel& model, const TokenSequence& prompt, std::size_t n,
                    const GeneratorConfig& cfg);

/// `times` independent generations under the same secret key. Each run gets
/// a fresh key history and sampling substream substream_seed(seed, run).
std::vector<TokenSequence> regenerate(const NextTokenModel& model, const TokenSequence& prompt,
                                      std::size_t n, const GeneratorConfig& cfg, std::size_t times);

}  // namespace wmkit
