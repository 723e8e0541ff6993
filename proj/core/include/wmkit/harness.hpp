#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "wmkit/core.hpp"
#include "wmkit/detector.hpp"
#include "wmkit/generator.hpp"
#include "wmkit/pda.hpp"
#include "wmkit/toylm.hpp"

namespace wmkit::harness {

struct ExperimentSpec {
  std::size_t prompts = 200;
  std::size_t responses_per_prompt = 50;
  std::size_t length = 30;
  std::size_t prompt_length = 8;
  std::vector<PdaRule> rules;
  /// Only "logprob" (mean per-token log-probability under the toy model).
  std::string metric = "logprob";
  std::size_t ngram = kDefaultNgram;
  double scale = kDefaultScale;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Toy-model parameters plus experiment design for one experiment family.
struct Preset {
  std::size_t vocab_size = 100;
  std::size_t order = 2;
  double concentration = 1.0;
  std::uint64_t model_seed = 1;
  ExperimentSpec spec;
};

/// Many responses per prompt under one key. The model is low-entropy
/// (alpha = 0.003) so that responses to a prompt share n-gram contexts.
Preset strong_preset();
/// One response per prompt under fresh keys, 10^4 prompts.
Preset weak_preset();
/// 200 prompts x 50 responses of 30 tokens from the alpha = 1 model.
Preset detection_preset();

ToyLM build_toylm(const Preset& preset);

/// (1/n) sum_i (1/m) | sum_j no_wm[i][j] - sum_j wm[i][j] |.
double delta_metric(const std::vector<std::vector<double>>& no_wm, const std::vector<std::vector<double>>& wm);

/// Per-prompt terms of delta_metric, used for standard errors.
std::vector<double> delta_terms(const std::vector<std::vector<double>>& no_wm,
                                const std::vector<std::vector<double>>& wm);

struct DeltaRow {
  std::string rule;
  double param = 0.0;
  double delta = 0.0;
  double std_error = 0.0;
  double baseline_delta = 0.0;
  /// Two-sample KS p-value of pooled per-response metrics against the
  /// unwatermarked run.
  double ks_p_value = 1.0;
  /// Per-prompt terms whose mean is `delta`.
  std::vector<double> terms;
};

struct DeltaTable {
  std::vector<DeltaRow> rows;
  double baseline_delta = 0.0;
  double baseline_std_error = 0.0;
  double baseline_ks_p_value = 1.0;
  std::vector<double> baseline_terms;
  bool fresh_keys = false;
};

/// Standard error of the mean per-prompt difference between two Delta
/// estimates computed on the same prompts.
double paired_std_error(std::span<const double> a, std::span<const double> b);

/// Prompt i of the experiment: prompt_length uniform tokens.
TokenSequence experiment_prompt(const ExperimentSpec& spec, std::size_t vocab_size, std::size_t index);

/// One secret key for every prompt and response, so responses to the same
/// prompt collide on their context keys. Response j of prompt i draws its
/// sampling uniforms from the same substream in the second unwatermarked run
/// and in every watermarked run; the reference run uses its own substream.
DeltaTable run_strong_experiment(const ToyLM& lm, const ExperimentSpec& spec);

/// A fresh secret key per response. With m = 1 this is the single-generation
/// (weak) design.
DeltaTable run_weak_experiment(const ToyLM& lm, const ExperimentSpec& spec);

/// Replaces ceil(eps n) positions, chosen uniformly without replacement, by
/// uniform tokens. For a fixed seed the chosen positions and replacements of
/// a smaller eps are a prefix of those of a larger eps.
TokenSequence paraphrase_attack(const TokenSequence& seq, double epsilon, std::uint64_t seed);

/// ceil(eps n) with a small guard against products like 0.3 * 10 landing
/// just above an integer.
std::size_t attack_count(double epsilon, std::size_t n);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

/// Rank (Mann-Whitney) AUC with ties counted one half, plus the ROC points of
/// the threshold sweep "score >= s" over every distinct score.
RocCurve roc_auc(std::span<const double> pos_scores, std::span<const double> neg_scores);

/// Trapezoidal area under the points.
double trapezoid_auc(std::span<const RocPoint> points);

enum class ThresholdMode { Hoeffding, Calibrated };

struct DetectionRow {
  std::string rule;
  double param = 0.0;
  double fpr = 0.0;
  double threshold = 0.0;
  double tnr = 0.0;
  double tpr = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  ThresholdMode mode = ThresholdMode::Hoeffding;
};

/// z statistic of the detector matching `rule` (soft detector for soft rules,
/// rank detector otherwise) on every text.
std::vector<double> detection_scores(const PdaRule& rule, std::span<const TokenSequence> texts,
                                     const SecretKey& secret, std::size_t vocab_size, std::size_t ngram,
                                     double scale);

/// Watermarked responses for every prompt and response slot under one key.
std::vector<TokenSequence> watermarked_texts(const ToyLM& lm, const ExperimentSpec& spec, const PdaRule& rule,
                                             const SecretKey& secret, std::uint64_t stream);

/// Unwatermarked responses for every prompt and response slot.
std::vector<TokenSequence> null_texts(const ToyLM& lm, const ExperimentSpec& spec, std::uint64_t stream);

/// TNR/TPR per rule per target FPR. Hoeffding mode uses z_for_fpr (normal
/// quantile for the soft detector); Calibrated mode takes the empirical
/// (1 - fpr) quantile of the detector on an independent null set.
std::vector<DetectionRow> run_detection_table(const ToyLM& lm, const ExperimentSpec& spec,
                                              std::span<const PdaRule> rules, std::span<const double> fprs,
                                              ThresholdMode mode);

struct AttackRow {
  std::string rule;
  double param = 0.0;
  double epsilon = 0.0;
  double auc = 0.0;
};

/// AUC of attacked watermarked texts against null texts per epsilon. The
/// attack seed of each text is shared across epsilons, so attacks are nested.
std::vector<AttackRow> run_attack_sweep(const ToyLM& lm, const ExperimentSpec& spec, const PdaRule& rule,
                                        std::span<const double> epsilons);

std::string to_string(ThresholdMode mode);

void write_delta_csv(std::ostream& out, const DeltaTable& table);
void write_detection_csv(std::ostream& out, std::span<const DetectionRow> rows);
void write_attack_csv(std::ostream& out, std::span<const AttackRow> rows);

}  // namespace wmkit::harness
