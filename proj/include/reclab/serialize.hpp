#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "reclab/analysis.hpp"
#include "reclab/baselines.hpp"
#include "reclab/core.hpp"
#include "reclab/ingest.hpp"

namespace reclab {

using Json = nlohmann::json;

// Doubles are written with enough digits to read back bit-identical.

/// {"k": int, "U": [[...]...], "V": [[...]...]}
Json to_json(const FactorModel& model);
FactorModel factor_model_from_json(const Json& j);

/// FactorModel fields plus "alpha", "beta", "sigma_u", "sigma_v".
Json to_json(const PowerMatModel& model);
PowerMatModel powermat_model_from_json(const Json& j);

/// Dense row-major {"n": int, "scores": [[...]...]}.
Json to_json(const SimilarityMatrix& sims);
SimilarityMatrix similarity_from_json(const Json& j);

Json to_json(const TrainConfig& cfg);
/// Starts from `base` and overrides the fields present in `j`.
TrainConfig train_config_from_json(const Json& j, const TrainConfig& base = {});

/// {"split": {"test_fraction": f64, "seed": int}, "rows": [{"algo", "mae", "n"}...]}
Json to_json(const EvalReport& report);
/// algo,mae,n
std::string to_csv(const EvalReport& report);

Json to_json(const RatingHistogram& histogram);
std::string to_csv(const RatingHistogram& histogram);
Json to_json(const PowerLawFit& fit);

/// {"N": int, "groups": [{"K": int, "M": int}...]}
DiversityInput diversity_input_from_json(const Json& j);

/// Replaces `path` by writing a sibling temporary file and renaming it.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

} // namespace reclab
