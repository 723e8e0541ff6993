#include "wmkit/json_io.hpp"

#include <fstream>

#include "wmkit/keying.hpp"

namespace wmkit::io {
namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

const Json& field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) throw InvalidArgument(std::string("missing JSON field '") + name + "'");
  return j.at(name);
}

}  // namespace

Json to_json(const TokenDistribution& p) {
  return Json{{"probs", std::vector<double>(p.probs().begin(), p.probs().end())}};
}

TokenDistribution distribution_from_json(const Json& j) {
  const Json& probs = j.is_array() ? j : field(j, "probs");
  try {
    return TokenDistribution::from_probs(probs.get<std::vector<double>>());
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("probs must be an array of numbers: ") + e.what());
  }
}

Json to_json(const TokenSequence& s) {
  return Json{{"tokens", std::vector<TokenId>(s.tokens().begin(), s.tokens().end())},
              {"vocab_size", s.vocab_size()}};
}

TokenSequence sequence_from_json(const Json& j) {
  try {
    return TokenSequence(field(j, "tokens").get<std::vector<TokenId>>(), field(j, "vocab_size").get<std::size_t>());
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("malformed token sequence: ") + e.what());
  }
}

Json to_json(const harness::ToyLM& lm) {
  return Json{{"vocab_size", lm.vocab_size()},
              {"order", lm.order()},
              {"concentration", lm.concentration()},
              {"model_seed", lm.model_seed()}};
}

harness::ToyLM toylm_from_json(const Json& j) {
  try {
    return harness::build_toylm(field(j, "vocab_size").get<std::size_t>(), field(j, "order").get<std::size_t>(),
                                field(j, "concentration").get<double>(), field(j, "model_seed").get<std::uint64_t>());
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("malformed toy model: ") + e.what());
  }
}

Json to_json(const ContextKey& c) {
  return std::visit(
      [](const auto& v) -> Json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NGramContext>) return Json{{"ngram", v.tokens}};
        else if constexpr (std::is_same_v<T, PositionContext>) return Json{{"position", v.index}};
        else return Json{{"fixed_index", v.index}};
      },
      c);
}

Json to_json(const GenerationTrace& t) {
  Json steps = Json::array();
  for (const auto& s : t.steps) {
    Json step{{"token", s.token}, {"watermarked", s.watermarked}};
    step["context"] = s.context ? to_json(*s.context) : Json(nullptr);
    if (s.pre) step["pre"] = to_json(*s.pre)["probs"];
    if (s.post) step["post"] = to_json(*s.post)["probs"];
    steps.push_back(std::move(step));
  }
  Json out{{"steps", std::move(steps)}, {"watermarked_count", t.watermarked_count()}};
  out["fixed_offset"] = t.fixed_offset ? Json(*t.fixed_offset) : Json(nullptr);
  return out;
}

Json to_json(const DetectionResult& r) {
  return Json{{"raw_sum", r.raw_sum},         {"centered", r.centered},   {"z", r.z},
              {"p_bound", r.p_bound},         {"scored_count", r.scored_count}, {"threshold", r.threshold},
              {"decision", r.decision}};
}

Json to_json(const MultiKeyResult& r) {
  Json per = Json::array();
  for (const auto& d : r.per_key) per.push_back(to_json(d));
  return Json{{"max_z", r.max_z}, {"best_index", r.best_index}, {"per_key", std::move(per)}};
}

Json to_json(const bias::BiasReport& r) {
  Json out{{"rule", to_string(r.rule)},
           {"exact", optional_number(r.exact)},
           {"closed_form", optional_number(r.closed_form)},
           {"consistent", bias::consistent(r)}};
  out["mc"] = r.mc ? Json{{"estimate", r.mc->estimate}, {"std_error", r.mc->std_error}, {"samples", r.mc->samples}}
                   : Json(nullptr);
  out["bounds"] = r.bounds ? Json{{"lo", r.bounds->lo}, {"hi", r.bounds->hi}} : Json(nullptr);
  return out;
}

Json to_json(const bias::TheoremReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  return Json{{"all_passed", r.all_passed()}, {"failures", r.failures()}, {"checks", std::move(checks)}};
}

Json to_json(const bias::CollisionReport& r) {
  return Json{{"joint", r.joint},
              {"product", r.product},
              {"gap", r.gap},
              {"joint_total", r.joint_total},
              {"joint_total_std_error", r.joint_total_std_error},
              {"product_total", r.product_total},
              {"samples", r.samples},
              {"repeats", r.repeats}};
}

Json to_json(const bias::SuiteReport& r) {
  Json lines = Json::array();
  for (const auto& l : r.lines) {
    lines.push_back({{"check", l.name}, {"checked", l.checked}, {"failed", l.failed}, {"first_failure", l.first_failure}});
  }
  return Json{{"trials", r.trials}, {"all_passed", r.all_passed()}, {"checks", std::move(lines)}};
}

Json to_json(const harness::DeltaTable& t) {
  Json rows = Json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"rule", r.rule},
                    {"param", r.param},
                    {"delta", r.delta},
                    {"stderr", r.std_error},
                    {"baseline_delta", r.baseline_delta},
                    {"ks_p_value", r.ks_p_value}});
  }
  return Json{{"rows", std::move(rows)},
              {"baseline_delta", t.baseline_delta},
              {"baseline_stderr", t.baseline_std_error},
              {"baseline_ks_p_value", t.baseline_ks_p_value},
              {"fresh_keys", t.fresh_keys}};
}

Json to_json(const std::vector<harness::DetectionRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back({{"rule", r.rule},
                   {"param", r.param},
                   {"fpr", r.fpr},
                   {"threshold", r.threshold},
                   {"tnr", r.tnr},
                   {"tpr", r.tpr},
                   {"n_pos", r.n_pos},
                   {"n_neg", r.n_neg},
                   {"mode", harness::to_string(r.mode)}});
  }
  return out;
}

Json to_json(const std::vector<harness::AttackRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back({{"rule", r.rule}, {"param", r.param}, {"epsilon", r.epsilon}, {"auc", r.auc}});
  }
  return out;
}

std::string config_hash(const Json& config) { return sha256(config.dump()).hex().substr(0, 16); }

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InvalidArgument("'" + path + "' is not valid JSON: " + e.what());
  }
}

}  // namespace wmkit::io
