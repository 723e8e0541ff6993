#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wmkit/biaslab.hpp"
#include "wmkit/core.hpp"
#include "wmkit/detector.hpp"
#include "wmkit/generator.hpp"
#include "wmkit/harness.hpp"
#include "wmkit/toylm.hpp"

namespace wmkit::io {

using Json = nlohmann::json;

/// {"probs": [...]}; a bare array is accepted on input.
Json to_json(const TokenDistribution& p);
TokenDistribution distribution_from_json(const Json& j);

/// {"tokens": [...], "vocab_size": N}
Json to_json(const TokenSequence& s);
TokenSequence sequence_from_json(const Json& j);

/// {"vocab_size", "order", "concentration", "model_seed"}
Json to_json(const harness::ToyLM& lm);
harness::ToyLM toylm_from_json(const Json& j);

Json to_json(const ContextKey& c);
Json to_json(const GenerationTrace& t);
Json to_json(const DetectionResult& r);
Json to_json(const MultiKeyResult& r);
Json to_json(const bias::BiasReport& r);
Json to_json(const bias::TheoremReport& r);
Json to_json(const bias::CollisionReport& r);
Json to_json(const bias::SuiteReport& r);
Json to_json(const harness::DeltaTable& t);
Json to_json(const std::vector<harness::DetectionRow>& rows);
Json to_json(const std::vector<harness::AttackRow>& rows);

/// First 16 hex digits of SHA-256 over the compact dump of `config`.
std::string config_hash(const Json& config);

/// Parses a file as JSON, with the path in any error message.
Json read_json_file(const std::string& path);

}  // namespace wmkit::io
