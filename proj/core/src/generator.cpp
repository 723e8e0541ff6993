#include "wmkit/generator.hpp"

#include <charconv>
#include <string>

#include "wmkit/numeric.hpp"

namespace wmkit {
namespace {

std::uint64_t parse_u64(std::string_view s, std::string_view what) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InvalidArgument("cannot parse " + std::string(what) + " from '" + std::string(s) + "'");
  }
  return v;
}

}  // namespace

KeySampler parse_sampler(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (name == "ngram") {
    const std::uint64_t a = arg.empty() ? kDefaultNgram : parse_u64(arg, "n-gram length");
    if (a == 0) throw InvalidArgument("n-gram length must be at least 1");
    return sampler::NGram{a};
  }
  if (name == "position") {
    const std::uint64_t cap = arg.empty() ? kDefaultPositionCap : parse_u64(arg, "position cap");
    if (cap == 0) throw InvalidArgument("position cap must be at least 1");
    return sampler::Position{cap};
  }
  if (name == "fixed") {
    const std::uint64_t n0 = arg.empty() ? kDefaultFixedKeySet : parse_u64(arg, "key set size");
    if (n0 == 0) throw InvalidArgument("fixed key set size must be at least 1");
    return sampler::FixedSet{n0};
  }
  throw InvalidArgument("unknown key sampler '" + std::string(text) + "'");
}

std::string to_string(const KeySampler& s) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, sampler::NGram>) return "ngram:" + std::to_string(v.a);
        else if constexpr (std::is_same_v<T, sampler::Position>) return "position:" + std::to_string(v.cap);
        else return "fixed:" + std::to_string(v.n0);
      },
      s);
}

double SamplingRng::uniform() { return unit_interval(engine_()); }

TokenId SamplingRng::sample(const TokenDistribution& p) { return inverse_select(p, uniform()); }

std::uint64_t SamplingRng::below(std::uint64_t bound) {
  if (bound == 0) throw InvalidArgument("SamplingRng::below: bound must be positive");
  // Rejection sampling keeps the draw exactly uniform.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % bound;
}

std::size_t GenerationTrace::watermarked_count() const {
  std::size_t count = 0;
  for (const auto& s : steps) count += s.watermarked ? 1 : 0;
  return count;
}

Generation generate(const NextTokenModel& model, const TokenSequence& prompt, std::size_t n,
                    const GeneratorConfig& cfg) {
  if (n == 0) throw InvalidArgument("generate: n must be at least 1");
  if (n > cfg.max_len) {
    throw InvalidArgument("generate: n = " + std::to_string(n) + " exceeds max_len = " +
                          std::to_string(cfg.max_len));
  }
  validate(cfg.rule);
  const std::size_t vocab = model.vocab_size();
  if (prompt.vocab_size() != vocab) {
    throw DimensionMismatch("prompt vocabulary differs from model vocabulary");
  }

  SamplingRng rng(cfg.sampling_seed);
  const KeyHasher hasher(cfg.secret);
  KeyHistory history;
  GenerationTrace trace;
  trace.steps.reserve(n);

  std::optional<std::uint64_t> fixed_offset;
  if (const auto* fs = std::get_if<sampler::FixedSet>(&cfg.sampler)) {
    fixed_offset = rng.below(fs->n0);
    trace.fixed_offset = fixed_offset;
  }

  std::vector<TokenId> context(prompt.tokens().begin(), prompt.tokens().end());
  context.reserve(prompt.size() + n);

  for (std::size_t i = 0; i < n; ++i) {
    std::optional<ContextKey> key_context = std::visit(
        [&](const auto& s) -> std::optional<ContextKey> {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, sampler::NGram>) {
            const std::size_t take = std::min(s.a, context.size());
            return NGramContext{std::vector<TokenId>(context.end() - static_cast<std::ptrdiff_t>(take),
                                                     context.end())};
          } else if constexpr (std::is_same_v<T, sampler::Position>) {
            if (i >= s.cap) return std::nullopt;
            return PositionContext{i};
          } else {
            if (i >= s.n0) return std::nullopt;
            return FixedIndexContext{(i + *fixed_offset) % s.n0};
          }
        },
        cfg.sampler);

    const bool fresh = key_context.has_value() && history.insert(*key_context);

    TokenDistribution p = [&] {
      try {
        TokenDistribution d = model.next(context);
        if (d.size() != vocab) {
          throw InvalidDistribution("model returned " + std::to_string(d.size()) +
                                    " probabilities for vocabulary of size " + std::to_string(vocab));
        }
        return d;
      } catch (const InvalidDistribution& e) {
        throw InvalidDistribution("step " + std::to_string(i) + ": " + e.what());
      }
    }();

    TraceStep step;
    step.context = key_context;
    step.watermarked = fresh;
    if (fresh) {
      RuleOutcome outcome = apply_rule(cfg.rule, p, hasher.digest(*key_context));
      if (const auto* t = std::get_if<TokenId>(&outcome)) {
        step.token = *t;
      } else {
        step.token = rng.sample(std::get<TokenDistribution>(outcome));
      }
      if (cfg.retain_distributions) step.post = outcome_distribution(outcome, vocab);
    } else {
      step.token = rng.sample(p);
      if (cfg.retain_distributions) step.post = p;
    }
    if (cfg.retain_distributions) step.pre = std::move(p);
    context.push_back(step.token);
    trace.steps.push_back(std::move(step));
  }

  std::vector<TokenId> generated(context.begin() + static_cast<std::ptrdiff_t>(prompt.size()), context.end());
  return Generation{TokenSequence(std::move(generated), vocab), std::move(trace)};
}

std::vector<TokenSequence> regenerate(const NextTokenModel& model, const TokenSequence& prompt,
                                      std::size_t n, const GeneratorConfig& cfg, std::size_t times) {
  if (times == 0) throw InvalidArgument("regenerate: times must be at least 1");
  std::vector<TokenSequence> out;
  out.reserve(times);
  for (std::size_t run = 0; run < times; ++run) {
    GeneratorConfig run_cfg = cfg;
    run_cfg.sampling_seed = substream_seed(cfg.sampling_seed, run);
    out.push_back(generate(model, prompt, n, run_cfg).tokens);
  }
  return out;
}

}  // namespace wmkit
