#include "wmkit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>

#include "wmkit/numeric.hpp"
#include "wmkit/parallel.hpp"
#include "wmkit/stats.hpp"

namespace wmkit::harness {
namespace {

// Substream tags under ExperimentSpec::seed.
constexpr std::uint64_t kPromptStream = 1;
constexpr std::uint64_t kReferenceStream = 2;
constexpr std::uint64_t kSamplingStream = 7;
constexpr std::uint64_t kNullStream = 3;
constexpr std::uint64_t kCalibrationStream = 4;
constexpr std::uint64_t kKeyStream = 5;
constexpr std::uint64_t kAttackStream = 6;
constexpr std::uint64_t kRuleStreamBase = 16;

std::uint64_t seed_of(std::uint64_t seed, std::uint64_t stream, std::uint64_t i, std::uint64_t j) {
  return substream_seed(substream_seed(substream_seed(seed, stream), i), j);
}

TokenSequence plain_generate(const ToyLM& lm, const TokenSequence& prompt, std::size_t n, std::uint64_t seed) {
  SamplingRng rng(seed);
  std::vector<TokenId> context(prompt.tokens().begin(), prompt.tokens().end());
  context.reserve(prompt.size() + n);
  for (std::size_t i = 0; i < n; ++i) context.push_back(rng.sample(lm.next(context)));
  return TokenSequence(std::vector<TokenId>(context.begin() + static_cast<std::ptrdiff_t>(prompt.size()),
                                            context.end()),
                       lm.vocab_size());
}

using Grid = std::vector<std::vector<double>>;

std::vector<double> flatten(const Grid& g) {
  std::vector<double> out;
  for (const auto& row : g) out.insert(out.end(), row.begin(), row.end());
  return out;
}

bool is_soft(const PdaRule& rule) { return std::holds_alternative<rule::Soft>(rule); }

DeltaTable run_delta_experiment(const ToyLM& lm, const ExperimentSpec& spec, bool fresh_keys) {
  spec.validate();
  const std::size_t n = spec.prompts;
  const std::size_t m = spec.responses_per_prompt;
  const std::size_t runs = 2 + spec.rules.size();
  // metrics[run][prompt][response]; run 0 is the reference, run 1 the
  // second unwatermarked model.
  std::vector<Grid> metrics(runs, Grid(n, std::vector<double>(m)));
  const SecretKey shared = SecretKey::from_seed(substream_seed(spec.seed, kKeyStream));

  parallel_chunks(n, 1, [&](std::size_t, std::size_t i, std::size_t) {
    const TokenSequence prompt = experiment_prompt(spec, lm.vocab_size(), i);
    for (std::size_t j = 0; j < m; ++j) {
      const std::uint64_t shared_seed = seed_of(spec.seed, kSamplingStream, i, j);
      const auto ref = plain_generate(lm, prompt, spec.length, seed_of(spec.seed, kReferenceStream, i, j));
      metrics[0][i][j] = lm.mean_log_prob(prompt.tokens(), ref.tokens());
      const auto other = plain_generate(lm, prompt, spec.length, shared_seed);
      metrics[1][i][j] = lm.mean_log_prob(prompt.tokens(), other.tokens());
      for (std::size_t r = 0; r < spec.rules.size(); ++r) {
        GeneratorConfig cfg;
        cfg.rule = spec.rules[r];
        cfg.sampler = sampler::NGram{spec.ngram};
        cfg.secret = fresh_keys ? SecretKey::from_seed(seed_of(spec.seed, kKeyStream, i, j)) : shared;
        cfg.sampling_seed = shared_seed;
        const auto gen = generate(lm, prompt, spec.length, cfg);
        metrics[2 + r][i][j] = lm.mean_log_prob(prompt.tokens(), gen.tokens.tokens());
      }
    }
  });

  DeltaTable table;
  table.fresh_keys = fresh_keys;
  const auto reference = flatten(metrics[0]);
  const auto base_terms = delta_terms(metrics[0], metrics[1]);
  const auto base = mean_and_stderr(base_terms);
  table.baseline_delta = base.mean;
  table.baseline_std_error = base.std_error;
  table.baseline_ks_p_value = ks_two_sample(reference, flatten(metrics[1])).p_value;
  table.baseline_terms = base_terms;
  for (std::size_t r = 0; r < spec.rules.size(); ++r) {
    auto terms = delta_terms(metrics[0], metrics[2 + r]);
    const auto est = mean_and_stderr(terms);
    DeltaRow row;
    row.terms = std::move(terms);
    row.rule = rule_family(spec.rules[r]);
    row.param = rule_param(spec.rules[r]);
    row.delta = est.mean;
    row.std_error = est.std_error;
    row.baseline_delta = base.mean;
    row.ks_p_value = ks_two_sample(reference, flatten(metrics[2 + r])).p_value;
    table.rows.push_back(std::move(row));
  }
  return table;
}

double threshold_for(const PdaRule& rule, double fpr) {
  return is_soft(rule) ? normal_upper_quantile(fpr) : z_for_fpr(fpr);
}

}  // namespace

Preset strong_preset() {
  Preset p;
  p.concentration = 0.003;
  p.spec.prompts = 100;
  p.spec.responses_per_prompt = 1000;
  p.spec.length = 30;
  return p;
}

Preset weak_preset() {
  Preset p;
  p.spec.prompts = 10000;
  p.spec.responses_per_prompt = 1;
  p.spec.length = 30;
  return p;
}

Preset detection_preset() {
  Preset p;
  p.spec.prompts = 200;
  p.spec.responses_per_prompt = 50;
  p.spec.length = 30;
  return p;
}

ToyLM build_toylm(const Preset& preset) {
  return build_toylm(preset.vocab_size, preset.order, preset.concentration, preset.model_seed);
}

void ExperimentSpec::validate() const {
  if (prompts == 0 || responses_per_prompt == 0 || length == 0) {
    throw InvalidArgument("experiment needs at least one prompt, response and token");
  }
  if (ngram == 0) throw InvalidArgument("n-gram length must be at least 1");
  if (metric != "logprob") throw InvalidArgument("unknown metric '" + metric + "'");
  for (const auto& r : rules) wmkit::validate(r);
}

std::vector<double> delta_terms(const Grid& no_wm, const Grid& wm) {
  if (no_wm.size() != wm.size()) {
    throw DimensionMismatch("delta: " + std::to_string(no_wm.size()) + " vs " + std::to_string(wm.size()) +
                            " prompts");
  }
  if (no_wm.empty()) throw InvalidArgument("delta: no prompts");
  const std::size_t m = no_wm.front().size();
  std::vector<double> terms;
  terms.reserve(no_wm.size());
  for (std::size_t i = 0; i < no_wm.size(); ++i) {
    if (no_wm[i].size() != m || wm[i].size() != m || m == 0) {
      throw DimensionMismatch("delta: prompt " + std::to_string(i) + " has a ragged response list");
    }
    CompensatedSum diff;
    for (double x : no_wm[i]) diff.add(x);
    for (double x : wm[i]) diff.add(-x);
    terms.push_back(std::abs(diff.value()) / static_cast<double>(m));
  }
  return terms;
}

double paired_std_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("paired_std_error: unequal lengths");
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  return mean_and_stderr(diff).std_error;
}

double delta_metric(const Grid& no_wm, const Grid& wm) {
  const auto terms = delta_terms(no_wm, wm);
  return compensated_total(terms) / static_cast<double>(terms.size());
}

TokenSequence experiment_prompt(const ExperimentSpec& spec, std::size_t vocab_size, std::size_t index) {
  SamplingRng rng(seed_of(spec.seed, kPromptStream, index, 0));
  std::vector<TokenId> tokens(spec.prompt_length);
  for (auto& t : tokens) t = static_cast<TokenId>(rng.below(vocab_size));
  return TokenSequence(std::move(tokens), vocab_size);
}

DeltaTable run_strong_experiment(const ToyLM& lm, const ExperimentSpec& spec) {
  return run_delta_experiment(lm, spec, false);
}

DeltaTable run_weak_experiment(const ToyLM& lm, const ExperimentSpec& spec) {
  return run_delta_experiment(lm, spec, true);
}

std::size_t attack_count(double epsilon, std::size_t n) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InvalidArgument("attack strength must lie in [0, 1]");
  const double k = std::ceil(epsilon * static_cast<double>(n) - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, k)));
}

TokenSequence paraphrase_attack(const TokenSequence& seq, double epsilon, std::uint64_t seed) {
  const std::size_t n = seq.size();
  const std::size_t k = attack_count(epsilon, n);
  std::vector<TokenId> tokens(seq.tokens().begin(), seq.tokens().end());
  SamplingRng rng(seed);
  std::vector<std::size_t> positions(n);
  std::iota(positions.begin(), positions.end(), std::size_t{0});
  // Forward Fisher-Yates; slot s and its replacement are drawn at step s
  // whatever k is.
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t pick = s + static_cast<std::size_t>(rng.below(n - s));
    std::swap(positions[s], positions[pick]);
    const auto replacement = static_cast<TokenId>(rng.below(seq.vocab_size()));
    if (s < k) tokens[positions[s]] = replacement;
  }
  return TokenSequence(std::move(tokens), seq.vocab_size());
}

double trapezoid_auc(std::span<const RocPoint> points) {
  CompensatedSum area;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area.add((points[i].fpr - points[i - 1].fpr) * (points[i].tpr + points[i - 1].tpr) / 2.0);
  }
  return area.value();
}

RocCurve roc_auc(std::span<const double> pos_scores, std::span<const double> neg_scores) {
  if (pos_scores.empty() || neg_scores.empty()) throw InvalidArgument("roc_auc: both score lists must be nonempty");
  std::vector<double> pos(pos_scores.begin(), pos_scores.end());
  std::vector<double> neg(neg_scores.begin(), neg_scores.end());
  std::sort(pos.begin(), pos.end(), std::greater<>());
  std::sort(neg.begin(), neg.end(), std::greater<>());
  const auto np = static_cast<double>(pos.size());
  const auto nn = static_cast<double>(neg.size());

  RocCurve curve;
  curve.points.push_back({0.0, 0.0});
  std::size_t ip = 0;
  std::size_t in = 0;
  // Pairs won outright plus half the tied pairs, accumulated per threshold.
  double wins = 0.0;
  while (ip < pos.size() || in < neg.size()) {
    double s = -std::numeric_limits<double>::infinity();
    if (ip < pos.size()) s = std::max(s, pos[ip]);
    if (in < neg.size()) s = std::max(s, neg[in]);
    std::size_t dp = 0;
    std::size_t dn = 0;
    while (ip < pos.size() && pos[ip] == s) ++ip, ++dp;
    while (in < neg.size() && neg[in] == s) ++in, ++dn;
    const auto neg_below = static_cast<double>(neg.size() - in);
    wins += static_cast<double>(dp) * (neg_below + 0.5 * static_cast<double>(dn));
    curve.points.push_back({static_cast<double>(in) / nn, static_cast<double>(ip) / np});
  }
  curve.auc = wins / (np * nn);
  return curve;
}

std::vector<double> detection_scores(const PdaRule& rule, std::span<const TokenSequence> texts,
                                     const SecretKey& secret, std::size_t vocab_size, std::size_t ngram,
                                     double scale) {
  std::vector<double> z(texts.size());
  if (const auto* soft = std::get_if<rule::Soft>(&rule)) {
    const SoftDetector det(secret, vocab_size, ngram, soft->gamma);
    parallel_chunks(texts.size(), 256, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) z[k] = det.detect(texts[k], 0.0).z;
    });
  } else {
    const BetaDetector det(secret, vocab_size, ngram, scale);
    parallel_chunks(texts.size(), 256, [&](std::size_t, std::size_t b, std::size_t e) {
      for (std::size_t k = b; k < e; ++k) z[k] = det.detect(texts[k], 0.0).z;
    });
  }
  return z;
}

std::vector<TokenSequence> watermarked_texts(const ToyLM& lm, const ExperimentSpec& spec, const PdaRule& rule,
                                             const SecretKey& secret, std::uint64_t stream) {
  spec.validate();
  const std::size_t m = spec.responses_per_prompt;
  std::vector<TokenSequence> out(spec.prompts * m, TokenSequence(std::vector<TokenId>{}, lm.vocab_size()));
  parallel_chunks(spec.prompts, 1, [&](std::size_t, std::size_t i, std::size_t) {
    const TokenSequence prompt = experiment_prompt(spec, lm.vocab_size(), i);
    for (std::size_t j = 0; j < m; ++j) {
      GeneratorConfig cfg;
      cfg.rule = rule;
      cfg.sampler = sampler::NGram{spec.ngram};
      cfg.secret = secret;
      cfg.sampling_seed = seed_of(spec.seed, stream, i, j);
      out[i * m + j] = generate(lm, prompt, spec.length, cfg).tokens;
    }
  });
  return out;
}

std::vector<TokenSequence> null_texts(const ToyLM& lm, const ExperimentSpec& spec, std::uint64_t stream) {
  spec.validate();
  const std::size_t m = spec.responses_per_prompt;
  std::vector<TokenSequence> out(spec.prompts * m, TokenSequence(std::vector<TokenId>{}, lm.vocab_size()));
  parallel_chunks(spec.prompts, 1, [&](std::size_t, std::size_t i, std::size_t) {
    const TokenSequence prompt = experiment_prompt(spec, lm.vocab_size(), i);
    for (std::size_t j = 0; j < m; ++j) {
      out[i * m + j] = plain_generate(lm, prompt, spec.length, seed_of(spec.seed, stream, i, j));
    }
  });
  return out;
}

std::vector<DetectionRow> run_detection_table(const ToyLM& lm, const ExperimentSpec& spec,
                                              std::span<const PdaRule> rules, std::span<const double> fprs,
                                              ThresholdMode mode) {
  const SecretKey secret = SecretKey::from_seed(substream_seed(spec.seed, kKeyStream));
  const auto nulls = null_texts(lm, spec, kNullStream);
  std::vector<TokenSequence> calibration;
  if (mode == ThresholdMode::Calibrated) calibration = null_texts(lm, spec, kCalibrationStream);

  std::vector<DetectionRow> rows;
  for (std::size_t r = 0; r < rules.size(); ++r) {
    const PdaRule& rule = rules[r];
    const auto pos = watermarked_texts(lm, spec, rule, secret, kRuleStreamBase + r);
    const auto pos_z = detection_scores(rule, pos, secret, lm.vocab_size(), spec.ngram, spec.scale);
    const auto neg_z = detection_scores(rule, nulls, secret, lm.vocab_size(), spec.ngram, spec.scale);
    std::vector<double> cal_z;
    if (mode == ThresholdMode::Calibrated) {
      cal_z = detection_scores(rule, calibration, secret, lm.vocab_size(), spec.ngram, spec.scale);
    }
    for (double fpr : fprs) {
      if (!(fpr > 0.0 && fpr < 1.0)) throw InvalidArgument("target FPR must lie in (0, 1)");
      DetectionRow row;
      row.rule = rule_family(rule);
      row.param = rule_param(rule);
      row.fpr = fpr;
      row.mode = mode;
      row.threshold = mode == ThresholdMode::Calibrated ? empirical_quantile(cal_z, 1.0 - fpr) : threshold_for(rule, fpr);
      const auto kept = std::count_if(neg_z.begin(), neg_z.end(), [&](double z) { return z <= row.threshold; });
      const auto hit = std::count_if(pos_z.begin(), pos_z.end(), [&](double z) { return z > row.threshold; });
      row.n_pos = pos_z.size();
      row.n_neg = neg_z.size();
      row.tnr = static_cast<double>(kept) / static_cast<double>(row.n_neg);
      row.tpr = static_cast<double>(hit) / static_cast<double>(row.n_pos);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<AttackRow> run_attack_sweep(const ToyLM& lm, const ExperimentSpec& spec, const PdaRule& rule,
                                        std::span<const double> epsilons) {
  const SecretKey secret = SecretKey::from_seed(substream_seed(spec.seed, kKeyStream));
  const auto pos = watermarked_texts(lm, spec, rule, secret, kRuleStreamBase);
  const auto nulls = null_texts(lm, spec, kNullStream);
  const auto neg_z = detection_scores(rule, nulls, secret, lm.vocab_size(), spec.ngram, spec.scale);
  std::vector<AttackRow> rows;
  for (double eps : epsilons) {
    std::vector<TokenSequence> attacked;
    attacked.reserve(pos.size());
    for (std::size_t k = 0; k < pos.size(); ++k) {
      attacked.push_back(paraphrase_attack(pos[k], eps, seed_of(spec.seed, kAttackStream, k, 0)));
    }
    const auto pos_z = detection_scores(rule, attacked, secret, lm.vocab_size(), spec.ngram, spec.scale);
    rows.push_back({rule_family(rule), rule_param(rule), eps, roc_auc(pos_z, neg_z).auc});
  }
  return rows;
}

std::string to_string(ThresholdMode mode) {
  return mode == ThresholdMode::Calibrated ? "calibrated" : "hoeffding";
}

void write_delta_csv(std::ostream& out, const DeltaTable& table) {
  out.precision(12);
  out << "rule,param,delta,baseline_delta,stderr\n";
  for (const auto& r : table.rows) {
    out << r.rule << ',' << r.param << ',' << r.delta << ',' << r.baseline_delta << ',' << r.std_error << '\n';
  }
  out << "baseline,0," << table.baseline_delta << ',' << table.baseline_delta << ',' << table.baseline_std_error
      << '\n';
}

void write_detection_csv(std::ostream& out, std::span<const DetectionRow> rows) {
  out.precision(12);
  out << "rule,param,threshold,tnr,tpr,n_pos,n_neg,fpr,mode\n";
  for (const auto& r : rows) {
    out << r.rule << ',' << r.param << ',' << r.threshold << ',' << r.tnr << ',' << r.tpr << ',' << r.n_pos << ','
        << r.n_neg << ',' << r.fpr << ',' << to_string(r.mode) << '\n';
  }
}

void write_attack_csv(std::ostream& out, std::span<const AttackRow> rows) {
  out.precision(12);
  out << "rule,param,epsilon,auc\n";
  for (const auto& r : rows) out << r.rule << ',' << r.param << ',' << r.epsilon << ',' << r.auc << '\n';
}

}  // namespace wmkit::harness
