#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reclab/baselines.hpp"
#include "reclab/core.hpp"
#include "reclab/zeroshot.hpp"

namespace reclab {

/// A named total prediction function over (user, item).
struct Predictor
{
    std::string name;
    std::function<double(size_t, size_t)> predict;
};

/// Mean absolute error over the observed test cells.
double mae(const Predictor& predictor, const RatingsDataset& test);

/// MAE of guessing a uniform random integer in [1, r_max] for each test cell.
double random_baseline_mae(const RatingsDataset& test, uint64_t seed);

enum class Algorithm
{
    ItemCf,
    Mf,
    ZeroMat,
    DotMat,
    PoissonMat,
    PowerMat,
    ZeroMatHybrid,
    DotMatHybrid,
    PoissonMatHybrid,
    Random,
};

std::string_view algorithm_name(Algorithm algo);
std::optional<Algorithm> parse_algorithm(std::string_view name);
std::span<const Algorithm> all_algorithms();
bool needs_context(Algorithm algo);

struct AlgorithmSettings
{
    TrainConfig defaults;
    // Per-algorithm replacements for `defaults`. Hybrids use the entries of
    // their zero-shot part and of Mf.
    std::map<Algorithm, TrainConfig> train;
    CfConfig cf;
    double fill_fraction = 1.0;
    PowerMatParams powermat;

    TrainConfig config_for(Algorithm algo) const;
};

struct CompareOptions
{
    uint64_t seed = 0;
    double split_ratio = 0.2;
    // Concurrent algorithm runs; 0 or 1 runs sequentially.
    size_t threads = 1;
    // Context samples for the training cells; required by PowerMat only.
    std::span<const ContextSample> train_contexts;
};

/// Trains `algo` on `train` (data-free trainers on its shape alone) and
/// wraps the result as a predictor. Random is not a trained model and is
/// rejected here.
Predictor train_predictor(Algorithm algo, const RatingsDataset& train, const AlgorithmSettings& settings,
                          std::span<const ContextSample> train_contexts = {});

/// One row per requested algorithm in request order, followed by the
/// random baseline when it was not requested. All rows share the split and
/// seeds.
EvalReport compare(const RatingsDataset& train, const RatingsDataset& test, std::span<const Algorithm> algorithms,
                   const AlgorithmSettings& settings, const CompareOptions& options);

} // namespace reclab
