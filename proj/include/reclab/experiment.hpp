#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "reclab/eval.hpp"
#include "reclab/ingest.hpp"
#include "reclab/serialize.hpp"

namespace reclab {

/// Process exit statuses shared by every subcommand.
enum ExitCode : int
{
    kExitOk = 0,
    kExitInputError = 1,
    kExitDivergence = 2,
};

enum class DatasetFormat
{
    MovieLens100K,
    MovieLens1M,
    CoMoDa,
};

std::optional<DatasetFormat> parse_dataset_format(std::string_view name);
std::string_view dataset_format_name(DatasetFormat format);

struct DatasetSpec
{
    // As written in the config; resolved against the config's directory.
    std::string path;
    std::filesystem::path resolved;
    DatasetFormat format = DatasetFormat::MovieLens100K;
    std::vector<std::string> context_columns;
};

struct ExperimentConfig
{
    DatasetSpec dataset;
    SplitSpec split;
    std::vector<Algorithm> algorithms;
    AlgorithmSettings settings;
    std::filesystem::path output_dir = "out";
    size_t repetitions = 1;
};

/// Parses a bench config document. Relative paths are taken relative to
/// `base_dir`. Unknown algorithm names and malformed fields raise ParseError.
ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// The effective configuration, as recorded in the run manifest.
Json to_json(const ExperimentConfig& config);

/// Ratings plus, for context-bearing formats, the per-row contexts.
struct LoadedDataset
{
    RatingsDataset ratings;
    std::vector<ContextSample> contexts;
    size_t duplicates_replaced = 0;
};

LoadedDataset load_dataset(const DatasetSpec& spec);

/// Concurrent algorithm runs allowed by RECLAB_THREADS, else the hardware
/// concurrency.
size_t thread_budget();

/// Settings for repetition `rep`: every training seed shifted by rep.
AlgorithmSettings settings_for_repetition(const AlgorithmSettings& settings, size_t rep);

/// ingest, then for each repetition split, train, compare, and write
/// seed-<s>/report.{json,csv}; finally aggregate.{json,csv} and
/// manifest.json. Returns an ExitCode; diagnostics go to `log`.
int run_bench(const ExperimentConfig& config, std::ostream& log);

struct ZipfAnalysisRequest
{
    std::filesystem::path dataset;
    DatasetFormat format = DatasetFormat::MovieLens100K;
    std::vector<std::string> context_columns;
    std::filesystem::path output_dir = ".";
};

/// Writes histogram.json, histogram.csv and zipf.json (value and item
/// popularity fits).
int run_analyze_zipf(const ZipfAnalysisRequest& request, std::ostream& log);

struct DiversityRequest
{
    std::filesystem::path input;
    InvariantDivisor divisor = InvariantDivisor::MarketFactorial;
    std::filesystem::path output_dir = ".";
};

/// Writes diversity.json with both log-space counts and their difference.
int run_analyze_diversity(const DiversityRequest& request, std::ostream& log);

/// Writes a generated dataset in MovieLens-100K layout.
int run_generate(const ZipfSpec& spec, const std::filesystem::path& out, std::ostream& log);

} // namespace reclab
