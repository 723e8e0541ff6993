#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wmkit/biaslab.hpp"
#include "wmkit/detector.hpp"
#include "wmkit/generator.hpp"
#include "wmkit/harness.hpp"
#include "wmkit/json_io.hpp"
#include "wmkit/stats.hpp"

namespace wmkit::cli {
namespace {

using io::Json;

struct KeyFlags {
  std::string hex;
  std::string file;
  std::int64_t seed = -1;

  void add(CLI::App* app) {
    auto* h = app->add_option("--key", hex, "Secret key as 256 hex characters");
    auto* f = app->add_option("--key-file", file, "File holding the secret key in hex");
    auto* s = app->add_option("--key-seed", seed, "Derive the secret key from a 64-bit seed");
    h->excludes(f)->excludes(s);
    f->excludes(s);
  }
  [[nodiscard]] bool given() const { return !hex.empty() || !file.empty() || seed >= 0; }
  [[nodiscard]] SecretKey resolve() const {
    if (!hex.empty()) return SecretKey::from_hex(hex);
    if (!file.empty()) {
      std::ifstream in(file);
      if (!in) throw InvalidArgument("cannot open key file '" + file + "'");
      std::string text;
      in >> text;
      return SecretKey::from_hex(text);
    }
    if (seed >= 0) return SecretKey::from_seed(static_cast<std::uint64_t>(seed));
    throw InvalidArgument("a secret key is required (--key, --key-file or --key-seed)");
  }
};

struct ModelFlags {
  std::string path;
  std::optional<std::size_t> vocab;
  std::optional<std::size_t> order;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;

  void add(CLI::App* app) {
    app->add_option("--model", path, "Toy model JSON {vocab_size, order, concentration, model_seed}");
    app->add_option("--vocab", vocab, "Toy model vocabulary size N (default 100)");
    app->add_option("--order", order, "Toy model context length c (default 2)");
    app->add_option("--alpha", alpha, "Toy model Dirichlet concentration (default: preset)");
    app->add_option("--model-seed", seed, "Toy model seed (default 1)");
  }
  [[nodiscard]] harness::ToyLM resolve(const harness::Preset& preset = harness::detection_preset()) const {
    if (!path.empty()) return io::toylm_from_json(io::read_json_file(path));
    return harness::build_toylm(vocab.value_or(preset.vocab_size), order.value_or(preset.order),
                                alpha.value_or(preset.concentration), seed.value_or(preset.model_seed));
  }
};

struct OutputFlags {
  std::string path;
  std::string format = "json";
};

void emit(const std::string& path, std::ostream& out, const std::string& text) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path);
  if (!file) throw InvalidArgument("cannot write '" + path + "'");
  file << text;
}

Json envelope(const std::string& command, const Json& config, Json result) {
  return Json{{"wmkit_version", WMKIT_VERSION},
              {"command", command},
              {"config", config},
              {"config_hash", io::config_hash(config)},
              {"result", std::move(result)}};
}

std::string csv_header(const std::string& command, const Json& config) {
  return "# wmkit " + std::string(WMKIT_VERSION) + " " + command + " config_hash=" + io::config_hash(config) +
         " config=" + config.dump() + "\n";
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::vector<PdaRule> parse_rules(const std::vector<std::string>& texts) {
  std::vector<PdaRule> rules;
  for (const auto& t : texts) rules.push_back(parse_rule(t));
  return rules;
}

Json rule_names(const std::vector<PdaRule>& rules) {
  Json out = Json::array();
  for (const auto& r : rules) out.push_back(to_string(r));
  return out;
}

Json model_config(const harness::ToyLM& lm) { return io::to_json(lm); }

std::size_t parse_count(double value, const char* what) {
  if (!(value >= 0.0) || value != std::floor(value) || value > 1e15) {
    throw InvalidArgument(std::string(what) + " must be a nonnegative integer");
  }
  return static_cast<std::size_t>(value);
}

// ---------------------------------------------------------------- keygen

struct KeygenCmd {
  std::int64_t seed = -1;
  std::string out_path;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("keygen", "Create a 1024-bit secret key (hex)");
    cmd->add_option("--seed", seed, "Derive deterministically from a seed instead of the OS entropy source");
    cmd->add_option("--out", out_path, "Output file (default stdout)");
  }
  int run(std::ostream& out) const {
    SecretKey key;
    if (seed >= 0) {
      key = SecretKey::from_seed(static_cast<std::uint64_t>(seed));
    } else {
      std::random_device rd;
      SecretKey::Bytes bytes{};
      for (auto& b : bytes) b = static_cast<std::uint8_t>(rd() & 0xff);
      key = SecretKey(bytes);
    }
    emit(out_path, out, key.to_hex() + "\n");
    return 0;
  }
};

// -------------------------------------------------------------- generate

struct GenerateCmd {
  std::string rule = "beta:0";
  std::string sampler = "ngram:5";
  KeyFlags key;
  ModelFlags model;
  std::string prompt_path;
  std::vector<TokenId> prompt_tokens;
  std::size_t len = 0;
  std::uint64_t seed = 0;
  double scale = kDefaultScale;
  bool retain = false;
  std::string out_path;
  std::string trace_path;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("generate", "Generate watermarked tokens from a toy model");
    cmd->add_option("--rule", rule, "PDA rule: gumbel, inverse, pr, beta:<b>, soft:delta=<d>[,gamma=<g>]")
        ->capture_default_str();
    cmd->add_option("--sampler", sampler, "Context keys: ngram:<a>, position[:cap], fixed[:n0]")
        ->capture_default_str();
    key.add(cmd);
    model.add(cmd);
    cmd->add_option("--prompt", prompt_path, "Prompt token file {tokens, vocab_size}");
    cmd->add_option("--prompt-tokens", prompt_tokens, "Prompt token ids")->delimiter(',');
    cmd->add_option("--len", len, "Number of tokens to generate")->required()->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "Seed of the true-randomness sampling stream")->capture_default_str();
    cmd->add_option("--C", scale, "Detector score scale recorded in the trace")->capture_default_str();
    cmd->add_flag("--retain-distributions", retain, "Store per-step distributions in the trace");
    cmd->add_option("--out", out_path, "Token output file (default stdout)");
    cmd->add_option("--trace", trace_path, "Trace output file");
  }

  int run(std::ostream& out) const {
    const harness::ToyLM lm = model.resolve();
    GeneratorConfig cfg;
    cfg.rule = parse_rule(rule);
    cfg.sampler = parse_sampler(sampler);
    cfg.secret = key.resolve();
    cfg.sampling_seed = seed;
    cfg.retain_distributions = retain;
    cfg.max_len = std::max<std::size_t>(cfg.max_len, len);

    std::vector<TokenId> ptoks = prompt_tokens;
    if (!prompt_path.empty()) {
      const TokenSequence p = io::sequence_from_json(io::read_json_file(prompt_path));
      ptoks.assign(p.tokens().begin(), p.tokens().end());
    }
    const TokenSequence prompt(ptoks, lm.vocab_size());
    const Generation gen = generate(lm, prompt, len, cfg);

    std::size_t ngram = kDefaultNgram;
    if (const auto* ng = std::get_if<sampler::NGram>(&cfg.sampler)) ngram = ng->a;
    Json config{{"rule", to_string(cfg.rule)}, {"sampler", to_string(cfg.sampler)},
                {"ngram", ngram},              {"C", scale},
                {"len", len},                  {"seed", seed},
                {"model", model_config(lm)},   {"prompt", ptoks}};
    if (const auto* soft = std::get_if<rule::Soft>(&cfg.rule)) config["gamma"] = soft->gamma;

    Json tokens = io::to_json(gen.tokens);
    tokens["wmkit_version"] = WMKIT_VERSION;
    tokens["config"] = config;
    tokens["config_hash"] = io::config_hash(config);
    emit(out_path, out, dump(tokens));

    if (!trace_path.empty()) {
      Json trace_config = config;
      trace_config["key"] = cfg.secret.to_hex();
      Json trace = io::to_json(gen.trace);
      trace["tokens"] = tokens["tokens"];
      trace["vocab_size"] = lm.vocab_size();
      trace["wmkit_version"] = WMKIT_VERSION;
      trace["config"] = trace_config;
      trace["config_hash"] = io::config_hash(trace_config);
      emit(trace_path, out, dump(trace));
    }
    return 0;
  }
};

// ---------------------------------------------------------------- detect

struct DetectCmd {
  std::string rule = "beta";
  KeyFlags key;
  std::string keys_path;
  std::size_t ngram = kDefaultNgram;
  double scale = kDefaultScale;
  double gamma = kDefaultGamma;
  double fpr = 0.01;
  double threshold = std::nan("");
  bool dedup = false;
  std::string trace_path;
  std::string tokens_path;
  std::string out_path;
  CLI::App* cmd = nullptr;

  void add(CLI::App& app) {
    cmd = app.add_subcommand("detect", "Model-agnostic watermark detection (rank score or green list)");
    cmd->add_option("--rule", rule, "Detector family: beta or soft")->capture_default_str();
    key.add(cmd);
    cmd->add_option("--keys", keys_path, "File with one secret key per line; max-z over keys");
    cmd->add_option("--ngram", ngram, "n-gram context length a")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--C", scale, "Rank score scale C")->capture_default_str();
    cmd->add_option("--gamma", gamma, "Green-list fraction for the soft detector")->capture_default_str();
    cmd->add_option("--fpr", fpr, "Target false positive rate")->capture_default_str();
    cmd->add_option("--threshold", threshold, "Explicit z threshold (overrides --fpr)");
    cmd->add_flag("--dedup", dedup, "Score each context key only once");
    cmd->add_option("--from-trace", trace_path, "Take key, a, C and tokens from a generate trace");
    cmd->add_option("tokens", tokens_path, "Token file {tokens, vocab_size}");
    cmd->add_option("--out", out_path, "Output file (default stdout)");
  }

  [[nodiscard]] bool flag_given(const char* name) const { return cmd->count(name) > 0; }

  int run(std::ostream& out) const {
    std::string family = rule.substr(0, rule.find(':'));
    SecretKey secret;
    bool have_secret = false;
    std::size_t a = ngram;
    double c = scale;
    double g = gamma;
    std::optional<TokenSequence> text;

    if (!trace_path.empty()) {
      const Json trace = io::read_json_file(trace_path);
      const Json& cfg = trace.at("config");
      if (!key.given() && keys_path.empty()) {
        secret = SecretKey::from_hex(cfg.at("key").get<std::string>());
        have_secret = true;
      }
      if (!flag_given("--ngram")) a = cfg.at("ngram").get<std::size_t>();
      if (!flag_given("--C")) c = cfg.at("C").get<double>();
      if (!flag_given("--rule")) {
        const std::string r = cfg.at("rule").get<std::string>();
        family = r.rfind("soft", 0) == 0 ? "soft" : "beta";
      }
      if (!flag_given("--gamma") && cfg.contains("gamma")) g = cfg.at("gamma").get<double>();
      if (tokens_path.empty()) text = io::sequence_from_json(trace);
    }
    if (!tokens_path.empty()) text = io::sequence_from_json(io::read_json_file(tokens_path));
    if (!text) throw InvalidArgument("no tokens given (positional token file or --from-trace)");
    if (family != "beta" && family != "soft") throw InvalidArgument("detector family must be beta or soft");

    const double thr = !std::isnan(threshold) ? threshold
                       : family == "soft"     ? normal_upper_quantile(fpr)
                                              : z_for_fpr(fpr);
    Json config{{"rule", family}, {"ngram", a}, {"C", c}, {"fpr", fpr}, {"threshold", thr}, {"dedup", dedup}};
    if (family == "soft") config["gamma"] = g;

    Json result;
    if (!keys_path.empty()) {
      if (family != "beta") throw InvalidArgument("multi-key detection uses the beta detector");
      std::ifstream in(keys_path);
      if (!in) throw InvalidArgument("cannot open key list '" + keys_path + "'");
      std::vector<SecretKey> secrets;
      for (std::string line; std::getline(in, line);) {
        line.erase(std::remove_if(line.begin(), line.end(), [](unsigned char ch) { return std::isspace(ch); }),
                   line.end());
        if (!line.empty()) secrets.push_back(SecretKey::from_hex(line));
      }
      const MultiKeyResult mk = detect_multikey(*text, secrets, a, c, thr);
      result = io::to_json(mk.per_key[mk.best_index]);
      result["decision"] = mk.max_z > thr;
      result["multikey"] = io::to_json(mk);
      result["keys"] = secrets.size();
      config["keys"] = secrets.size();
    } else {
      if (!have_secret) secret = key.resolve();
      const DetectionResult r = family == "soft" ? detect_soft(*text, secret, a, g, thr, dedup)
                                                 : detect_beta(*text, secret, a, c, thr, dedup);
      result = io::to_json(r);
    }
    emit(out_path, out, dump(envelope("detect", config, std::move(result))));
    return 0;
  }
};

// ------------------------------------------------------------------ bias

struct BiasCmd {
  std::string dist_path;
  std::string rule;
  bool exact = false;
  double mc = 0;
  std::uint64_t seed = 1;
  std::string out_path;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("bias", "Expected total variation D(P, F) of a rule on one distribution");
    cmd->add_option("--dist", dist_path, "Distribution JSON {probs}")->required();
    cmd->add_option("--rule", rule, "PDA rule")->required();
    cmd->add_flag("--exact", exact, "Enumerate all permutations (N <= 9)");
    cmd->add_option("--mc", mc, "Monte Carlo key samples (e.g. 1e6)");
    cmd->add_option("--seed", seed, "Monte Carlo seed")->capture_default_str();
    cmd->add_option("--out", out_path, "Output file (default stdout)");
  }
  int run(std::ostream& out) const {
    const TokenDistribution p = io::distribution_from_json(io::read_json_file(dist_path));
    const PdaRule r = parse_rule(rule);
    const std::size_t samples = parse_count(mc, "--mc");
    const bias::BiasReport report = bias::bias_report(p, r, exact, samples, seed);
    Json config{{"dist", io::to_json(p)}, {"rule", to_string(r)}, {"exact", exact}, {"mc", samples}, {"seed", seed}};
    emit(out_path, out, dump(envelope("bias", config, io::to_json(report))));
    return 0;
  }
};

// ------------------------------------------------------- verify-theorems

struct VerifyCmd {
  std::size_t trials = 1000;
  std::size_t nmax = 7;
  std::uint64_t seed = 1;
  std::vector<double> betas{0.0, 0.1, 0.25, 0.4, 0.5};
  std::string format = "text";
  std::string out_path;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "verify-theorems", "Exact checks of the bias ordering, bounds and beta monotonicity on random distributions");
    cmd->add_option("--trials", trials, "Random distributions to check")->capture_default_str();
    cmd->add_option("--nmax", nmax, "Largest vocabulary (2..9)")->capture_default_str();
    cmd->add_option("--seed", seed, "Seed of the random distributions")->capture_default_str();
    cmd->add_option("--betas", betas, "Beta grid")->delimiter(',')->capture_default_str();
    cmd->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}))->capture_default_str();
    cmd->add_option("--out", out_path, "Output file (default stdout)");
  }
  int run(std::ostream& out) const {
    const bias::SuiteReport suite = bias::verify_theorem_suite(trials, nmax, betas, seed);
    Json config{{"trials", trials}, {"nmax", nmax}, {"seed", seed}, {"betas", betas}};
    if (format == "json") {
      emit(out_path, out, dump(envelope("verify-theorems", config, io::to_json(suite))));
    } else {
      std::ostringstream s;
      s << "# wmkit " << WMKIT_VERSION << " verify-theorems config_hash=" << io::config_hash(config) << "\n";
      for (const auto& l : suite.lines) {
        s << (l.failed == 0 ? "PASS " : "FAIL ") << std::left << std::setw(16) << l.name << " " << l.checked
          << " checked, " << l.failed << " failed";
        if (l.failed) s << "  first: " << l.first_failure;
        s << "\n";
      }
      s << (suite.all_passed() ? "all checks passed" : "some checks failed") << " over " << trials
        << " distributions\n";
      emit(out_path, out, s.str());
    }
    return suite.all_passed() ? 0 : 1;
  }
};

// ------------------------------------------------------- experiment/attack

struct SpecFlags {
  std::size_t prompts = 0;
  std::size_t responses = 0;
  std::size_t length = 0;
  std::size_t prompt_length = 0;
  std::size_t ngram = kDefaultNgram;
  double scale = kDefaultScale;
  std::uint64_t seed = 1;

  void add(CLI::App* cmd) {
    cmd->add_option("--prompts", prompts, "Number of prompts n (0: preset)");
    cmd->add_option("--responses", responses, "Responses per prompt m (0: preset)");
    cmd->add_option("--length", length, "Tokens per response (0: preset)");
    cmd->add_option("--prompt-length", prompt_length, "Prompt tokens (0: preset)");
    cmd->add_option("--ngram", ngram, "n-gram context length a")->capture_default_str();
    cmd->add_option("--C", scale, "Rank score scale C")->capture_default_str();
    cmd->add_option("--seed", seed, "Experiment seed")->capture_default_str();
  }
  [[nodiscard]] harness::ExperimentSpec resolve(harness::ExperimentSpec spec) const {
    if (prompts) spec.prompts = prompts;
    if (responses) spec.responses_per_prompt = responses;
    if (length) spec.length = length;
    if (prompt_length) spec.prompt_length = prompt_length;
    spec.ngram = ngram;
    spec.scale = scale;
    spec.seed = seed;
    return spec;
  }
};

Json spec_config(const harness::ExperimentSpec& s) {
  return Json{{"prompts", s.prompts}, {"responses", s.responses_per_prompt}, {"length", s.length},
              {"prompt_length", s.prompt_length}, {"ngram", s.ngram}, {"C", s.scale},
              {"seed", s.seed}, {"metric", s.metric}};
}

struct ExperimentCmd {
  std::string kind = "strong";
  ModelFlags model;
  SpecFlags spec;
  std::vector<std::string> rules;
  std::vector<double> fprs{0.1, 0.05, 0.01, 0.001};
  bool calibrate = false;
  OutputFlags output{"", "csv"};

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("experiment", "Delta tables (strong / weak) and detection TNR/TPR tables");
    cmd->add_option("--kind", kind, "strong, weak or detection")
        ->check(CLI::IsMember({"strong", "weak", "detection"}))
        ->capture_default_str();
    model.add(cmd);
    spec.add(cmd);
    cmd->add_option("--rules", rules, "Rules to run (space separated)");
    cmd->add_option("--fprs", fprs, "Target false positive rates (detection)")->delimiter(',')->capture_default_str();
    cmd->add_flag("--calibrate", calibrate, "Detection thresholds from empirical null quantiles");
    cmd->add_option("--format", output.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    cmd->add_option("--out", output.path, "Output file (default stdout)");
  }

  int run(std::ostream& out) const {
    const harness::Preset preset = kind == "weak"        ? harness::weak_preset()
                                   : kind == "detection" ? harness::detection_preset()
                                                         : harness::strong_preset();
    const harness::ToyLM lm = model.resolve(preset);
    harness::ExperimentSpec s = spec.resolve(preset.spec);
    std::vector<PdaRule> rs = rules.empty() ? std::vector<PdaRule>{} : parse_rules(rules);
    if (rs.empty()) {
      rs = kind == "detection"
               ? std::vector<PdaRule>{rule::Beta{0.0}, rule::Beta{0.05}, rule::Beta{0.1}, rule::Beta{0.2},
                                      rule::Beta{0.3}}
               : std::vector<PdaRule>{rule::InverseSampling{}, rule::Gumbel{}, rule::Beta{0.0}, rule::Beta{0.3}};
    }
    Json config{{"kind", kind}, {"model", model_config(lm)}, {"spec", spec_config(s)}, {"rules", rule_names(rs)}};

    if (kind == "detection") {
      const auto mode = calibrate ? harness::ThresholdMode::Calibrated : harness::ThresholdMode::Hoeffding;
      config["fprs"] = fprs;
      config["threshold_mode"] = harness::to_string(mode);
      const auto rows = harness::run_detection_table(lm, s, rs, fprs, mode);
      if (output.format == "json") {
        emit(output.path, out, dump(envelope("experiment", config, io::to_json(rows))));
      } else {
        std::ostringstream csv;
        csv << csv_header("experiment", config);
        harness::write_detection_csv(csv, rows);
        emit(output.path, out, csv.str());
      }
      return 0;
    }
    s.rules = rs;
    const auto table = kind == "weak" ? harness::run_weak_experiment(lm, s) : harness::run_strong_experiment(lm, s);
    if (output.format == "json") {
      emit(output.path, out, dump(envelope("experiment", config, io::to_json(table))));
    } else {
      std::ostringstream csv;
      csv << csv_header("experiment", config);
      harness::write_delta_csv(csv, table);
      emit(output.path, out, csv.str());
    }
    return 0;
  }
};

struct AttackCmd {
  ModelFlags model;
  SpecFlags spec;
  std::vector<std::string> rules{"beta:0", "beta:0.3"};
  std::vector<double> eps{0.0, 0.05, 0.1, 0.2, 0.3};
  OutputFlags output{"", "csv"};

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("attack", "ROC AUC under random token-replacement attacks");
    model.add(cmd);
    spec.add(cmd);
    cmd->add_option("--rules", rules, "Rules to run (space separated)")->capture_default_str();
    cmd->add_option("--eps", eps, "Attack strengths")->delimiter(',')->capture_default_str();
    cmd->add_option("--format", output.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    cmd->add_option("--out", output.path, "Output file (default stdout)");
  }

  int run(std::ostream& out) const {
    const harness::Preset preset = harness::detection_preset();
    const harness::ToyLM lm = model.resolve(preset);
    const harness::ExperimentSpec s = spec.resolve(preset.spec);
    const auto rs = parse_rules(rules);
    Json config{{"model", model_config(lm)}, {"spec", spec_config(s)}, {"rules", rule_names(rs)}, {"eps", eps}};
    std::vector<harness::AttackRow> rows;
    for (const auto& r : rs) {
      auto part = harness::run_attack_sweep(lm, s, r, eps);
      rows.insert(rows.end(), part.begin(), part.end());
    }
    if (output.format == "json") {
      emit(output.path, out, dump(envelope("attack", config, io::to_json(rows))));
    } else {
      std::ostringstream csv;
      csv << csv_header("attack", config);
      harness::write_attack_csv(csv, rows);
      emit(output.path, out, csv.str());
    }
    return 0;
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"wmkit: distortion-free language model watermarks"};
  app.set_version_flag("--version", WMKIT_VERSION);
  app.set_config("--config", "", "TOML/INI config file; command-line flags take precedence");
  app.require_subcommand(1);

  KeygenCmd keygen;
  GenerateCmd gen;
  DetectCmd det;
  BiasCmd bias_cmd;
  VerifyCmd verify;
  ExperimentCmd experiment;
  AttackCmd attack;
  keygen.add(app);
  gen.add(app);
  det.add(app);
  bias_cmd.add(app);
  verify.add(app);
  experiment.add(app);
  attack.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << WMKIT_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "wmkit: " << e.what() << "\n";
    const auto* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return 2;
  }

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "keygen") return keygen.run(out);
    if (name == "generate") return gen.run(out);
    if (name == "detect") return det.run(out);
    if (name == "bias") return bias_cmd.run(out);
    if (name == "verify-theorems") return verify.run(out);
    if (name == "experiment") return experiment.run(out);
    if (name == "attack") return attack.run(out);
  } catch (const std::exception& e) {
    err << "wmkit: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace wmkit::cli
