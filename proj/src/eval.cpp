#include "reclab/eval.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <thread>

#include "reclab/random.hpp"

namespace reclab {

namespace {

constexpr uint64_t kGuessStream = 5;

constexpr std::array kAlgorithms = {
    Algorithm::ItemCf,        Algorithm::Mf,           Algorithm::ZeroMat,
    Algorithm::DotMat,        Algorithm::PoissonMat,   Algorithm::PowerMat,
    Algorithm::ZeroMatHybrid, Algorithm::DotMatHybrid, Algorithm::PoissonMatHybrid,
    Algorithm::Random,
};

/// Sum of absolute errors in sorted order, so the result is independent of
/// the order of the test rows.
double mean_sorted(std::vector<double> errors)
{
    std::sort(errors.begin(), errors.end());
    double sum = 0.0;
    for (double e : errors) {
        sum += e;
    }
    return sum / static_cast<double>(errors.size());
}

std::optional<ZeroShotAlgo> zero_shot_part(Algorithm algo)
{
    switch (algo) {
    case Algorithm::ZeroMat:
    case Algorithm::ZeroMatHybrid:
        return ZeroShotAlgo::ZeroMat;
    case Algorithm::DotMat:
    case Algorithm::DotMatHybrid:
        return ZeroShotAlgo::DotMat;
    case Algorithm::PoissonMat:
    case Algorithm::PoissonMatHybrid:
        return ZeroShotAlgo::PoissonMat;
    default:
        return std::nullopt;
    }
}

Algorithm plain_of(ZeroShotAlgo algo)
{
    switch (algo) {
    case ZeroShotAlgo::ZeroMat:
        return Algorithm::ZeroMat;
    case ZeroShotAlgo::DotMat:
        return Algorithm::DotMat;
    case ZeroShotAlgo::PoissonMat:
        return Algorithm::PoissonMat;
    }
    return Algorithm::ZeroMat;
}

/// Runs tasks[0..n) on up to `threads` workers; rethrows the failure of
/// the lowest-index task, if any.
void run_all(std::vector<std::function<void()>>& tasks, size_t threads)
{
    std::vector<std::exception_ptr> errors(tasks.size());
    auto run = [&](size_t i) {
        try {
            tasks[i]();
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (threads <= 1 || tasks.size() <= 1) {
        for (size_t i = 0; i < tasks.size(); i++) {
            run(i);
        }
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::jthread> workers;
        for (size_t w = 0; w < std::min(threads, tasks.size()); w++) {
            workers.emplace_back([&] {
                for (size_t i = next++; i < tasks.size(); i = next++) {
                    run(i);
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace

double mae(const Predictor& predictor, const RatingsDataset& test)
{
    if (test.empty()) {
        throw std::invalid_argument("MAE needs a nonempty test set");
    }
    std::vector<double> errors;
    errors.reserve(test.size());
    for (const auto& r : test.ratings()) {
        errors.push_back(std::abs(predictor.predict(r.user_id, r.item_id) - r.value));
    }
    return mean_sorted(std::move(errors));
}

double random_baseline_mae(const RatingsDataset& test, uint64_t seed)
{
    if (test.empty()) {
        throw std::invalid_argument("random baseline needs a nonempty test set");
    }
    Rng rng(seed, kGuessStream);
    std::vector<double> errors;
    errors.reserve(test.size());
    for (const auto& r : test.ratings()) {
        auto guess = static_cast<int>(rng.below(static_cast<uint64_t>(test.r_max()))) + 1;
        errors.push_back(std::abs(guess - r.value));
    }
    return mean_sorted(std::move(errors));
}

std::string_view algorithm_name(Algorithm algo)
{
    switch (algo) {
    case Algorithm::ItemCf:
        return "itemcf";
    case Algorithm::Mf:
        return "mf";
    case Algorithm::ZeroMat:
        return "zeromat";
    case Algorithm::DotMat:
        return "dotmat";
    case Algorithm::PoissonMat:
        return "poissonmat";
    case Algorithm::PowerMat:
        return "powermat";
    case Algorithm::ZeroMatHybrid:
        return "zeromat-hybrid";
    case Algorithm::DotMatHybrid:
        return "dotmat-hybrid";
    case Algorithm::PoissonMatHybrid:
        return "poissonmat-hybrid";
    case Algorithm::Random:
        return "random";
    }
    return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view name)
{
    for (auto algo : kAlgorithms) {
        if (algorithm_name(algo) == name) {
            return algo;
        }
    }
    return std::nullopt;
}

std::span<const Algorithm> all_algorithms()
{
    return kAlgorithms;
}

bool needs_context(Algorithm algo)
{
    return algo == Algorithm::PowerMat;
}

TrainConfig AlgorithmSettings::config_for(Algorithm algo) const
{
    auto found = train.find(algo);
    return found != train.end() ? found->second : defaults;
}

Predictor train_predictor(Algorithm algo, const RatingsDataset& train, const AlgorithmSettings& settings,
                          std::span<const ContextSample> train_contexts)
{
    std::string name(algorithm_name(algo));
    const int r_max = train.r_max();
    switch (algo) {
    case Algorithm::ItemCf: {
        auto sims = std::make_shared<const SimilarityMatrix>(item_similarities(train, settings.cf.similarity));
        auto index = std::make_shared<const UserRatings>(train);
        CfConfig cf = settings.cf;
        return Predictor{name, [sims, index, cf](size_t u, size_t i) { return cf_predict(u, i, *sims, *index, cf); }};
    }
    case Algorithm::Mf: {
        auto model = std::make_shared<const FactorModel>(mf_train(train, settings.config_for(Algorithm::Mf)));
        return Predictor{name, [model, r_max](size_t u, size_t i) { return mf_predict(*model, u, i, r_max); }};
    }
    case Algorithm::ZeroMat:
    case Algorithm::DotMat:
    case Algorithm::PoissonMat: {
        TrainConfig cfg = settings.config_for(algo);
        if (cfg.samples_per_epoch == 0) {
            cfg.samples_per_epoch = train.size();
        }
        auto predictor = std::make_shared<const ZeroShotPredictor>(
            zeroshot_train(*zero_shot_part(algo), train.n_users(), train.n_items(), cfg), r_max, cfg.eps_floor);
        return Predictor{name, [predictor](size_t u, size_t i) { return predictor->predict(u, i); }};
    }
    case Algorithm::PowerMat: {
        if (train_contexts.empty()) {
            throw ValidationError("powermat: context required, but the dataset carries no context columns");
        }
        TrainConfig cfg = settings.config_for(algo);
        auto model = powermat_train(train_contexts, train.n_users(), train.n_items(), cfg, settings.powermat);
        auto predictor = std::make_shared<const ZeroShotPredictor>(std::move(model.factors), r_max, cfg.eps_floor);
        return Predictor{name, [predictor](size_t u, size_t i) { return predictor->predict(u, i); }};
    }
    case Algorithm::ZeroMatHybrid:
    case Algorithm::DotMatHybrid:
    case Algorithm::PoissonMatHybrid: {
        ZeroShotAlgo part = *zero_shot_part(algo);
        HybridConfig cfg{settings.config_for(plain_of(part)), settings.config_for(Algorithm::Mf),
                         settings.fill_fraction};
        auto model = std::make_shared<const FactorModel>(hybrid_train(train, part, cfg));
        return Predictor{name, [model, r_max](size_t u, size_t i) { return mf_predict(*model, u, i, r_max); }};
    }
    case Algorithm::Random:
        break;
    }
    throw std::invalid_argument("random guessing is evaluated by random_baseline_mae, not as a trained predictor");
}

EvalReport compare(const RatingsDataset& train, const RatingsDataset& test, std::span<const Algorithm> algorithms,
                   const AlgorithmSettings& settings, const CompareOptions& options)
{
    std::vector<Algorithm> rows(algorithms.begin(), algorithms.end());
    if (std::find(rows.begin(), rows.end(), Algorithm::Random) == rows.end()) {
        rows.push_back(Algorithm::Random);
    }
    for (auto algo : rows) {
        if (needs_context(algo) && options.train_contexts.empty()) {
            throw ValidationError(std::string(algorithm_name(algo)) +
                                  ": context required, but the dataset carries no context columns");
        }
    }
    if (test.empty()) {
        throw std::invalid_argument("compare needs a nonempty test set");
    }

    EvalReport report;
    report.split_ratio = options.split_ratio;
    report.seed = options.seed;
    report.entries.resize(rows.size());
    std::vector<std::function<void()>> tasks;
    for (size_t r = 0; r < rows.size(); r++) {
        tasks.emplace_back([&, r] {
            Algorithm algo = rows[r];
            double value = algo == Algorithm::Random
                               ? random_baseline_mae(test, options.seed)
                               : mae(train_predictor(algo, train, settings, options.train_contexts), test);
            report.entries[r] = EvalEntry{std::string(algorithm_name(algo)), value, test.size()};
        });
    }
    run_all(tasks, options.threads);
    return report;
}

} // namespace reclab
