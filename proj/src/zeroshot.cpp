#include "reclab/zeroshot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "reclab/baselines.hpp"
#include "reclab/random.hpp"

namespace reclab {

namespace {

constexpr uint64_t kSampleStream = 2;
constexpr uint64_t kFillStream = 3;
constexpr uint64_t kAlphaStream = 4;

/// max(p, floor), counting activations.
double floor_at(double p, double floor, TrainStats* stats)
{
    if (p < floor) {
        if (stats) {
            stats->floor_clamps++;
        }
        p = floor;
    }
    if (stats) {
        stats->dot_evaluations++;
        stats->min_guarded_argument = std::min(stats->min_guarded_argument, p);
    }
    return p;
}

double sign(double x)
{
    return static_cast<double>((x > 0.0) - (x < 0.0));
}

/// u -= gamma * coef * v and v -= gamma * coef * u, both from old values.
void symmetric_descent(std::span<double> user, std::span<double> item, double step)
{
    for (size_t f = 0; f < user.size(); f++) {
        double u = user[f];
        double v = item[f];
        user[f] = u - step * v;
        item[f] = v - step * u;
    }
}

template<typename Step>
FactorModel train_sampled(std::string_view name, size_t n_users, size_t n_items, const TrainConfig& cfg,
                          TrainStats* stats, Step step)
{
    cfg.validate();
    if (n_users == 0 || n_items == 0) {
        throw std::invalid_argument("data-free training needs a nonempty grid");
    }
    if (cfg.samples_per_epoch == 0) {
        throw std::invalid_argument("samples_per_epoch must be set for data-free training");
    }
    FactorModel init = initial_factors(n_users, n_items, cfg);
    Matrix users = init.users();
    Matrix items = init.items();
    Rng rng(cfg.seed, kSampleStream);
    for (size_t epoch = 0; epoch < cfg.epochs; epoch++) {
        for (size_t s = 0; s < cfg.samples_per_epoch; s++) {
            size_t u = static_cast<size_t>(rng.below(n_users));
            size_t j = static_cast<size_t>(rng.below(n_items));
            step(users.row(u), items.row(j), cfg, stats);
        }
        if (!users.all_finite() || !items.all_finite()) {
            throw DivergenceError(std::string(name), epoch + 1);
        }
    }
    return FactorModel(std::move(users), std::move(items));
}

} // namespace

std::string_view zeroshot_name(ZeroShotAlgo algo)
{
    switch (algo) {
    case ZeroShotAlgo::ZeroMat:
        return "zeromat";
    case ZeroShotAlgo::DotMat:
        return "dotmat";
    case ZeroShotAlgo::PoissonMat:
        return "poissonmat";
    }
    return "unknown";
}

void zeromat_step(std::span<double> user, std::span<double> item, const TrainConfig& cfg, TrainStats* stats)
{
    double p = floor_at(dot(user, item), cfg.eps_floor, stats);
    for (size_t f = 0; f < user.size(); f++) {
        double u = user[f];
        double v = item[f];
        user[f] = u + cfg.gamma * (v / p - 2.0 * u);
        item[f] = v + cfg.gamma * (u / p - 2.0 * v);
    }
}

void dotmat_step(std::span<double> user, std::span<double> item, const TrainConfig& cfg, TrainStats* stats)
{
    double p = floor_at(dot(user, item), cfg.eps_floor, stats);
    if (p > cfg.p_max) {
        if (stats) {
            stats->cap_clamps++;
        }
        p = cfg.p_max;
    }
    double g = std::pow(p, p);
    double coef = g * sign(g - p) * (1.0 + std::log(p));
    symmetric_descent(user, item, cfg.gamma * coef);
}

double poissonmat_coefficient(double p)
{
    return (p + 1.0) / p + std::log(p) - 1.0;
}

void poissonmat_step(std::span<double> user, std::span<double> item, const TrainConfig& cfg, TrainStats* stats)
{
    double p = floor_at(dot(user, item), cfg.eps_floor, stats);
    symmetric_descent(user, item, cfg.gamma * poissonmat_coefficient(p));
}

void powermat_step(std::span<double> user, std::span<double> item, std::span<double> alpha, double& beta,
                   std::span<const double> context, const TrainConfig& cfg, const PowerMatParams& params,
                   TrainStats* stats)
{
    double p = floor_at(dot(user, item), cfg.eps_floor, stats);
    double s = dot(alpha, context);
    double bp = beta * p;
    for (size_t f = 0; f < user.size(); f++) {
        double u = user[f];
        double v = item[f];
        user[f] = u - cfg.gamma * (bp * v + (bp + s) * v - (2.0 / params.sigma_u) * u);
        item[f] = v - cfg.gamma * (bp * u + (bp + s) * u - (2.0 / params.sigma_v) * v);
    }
    for (size_t c = 0; c < alpha.size(); c++) {
        alpha[c] -= cfg.gamma * p * context[c];
    }
    beta -= cfg.gamma * p * p;
}

FactorModel zeromat_train(size_t n_users, size_t n_items, const TrainConfig& cfg, TrainStats* stats)
{
    return train_sampled("zeromat", n_users, n_items, cfg, stats, zeromat_step);
}

FactorModel dotmat_train(size_t n_users, size_t n_items, const TrainConfig& cfg, TrainStats* stats)
{
    return train_sampled("dotmat", n_users, n_items, cfg, stats, dotmat_step);
}

FactorModel poissonmat_train(size_t n_users, size_t n_items, const TrainConfig& cfg, TrainStats* stats)
{
    return train_sampled("poissonmat", n_users, n_items, cfg, stats, poissonmat_step);
}

FactorModel zeroshot_train(ZeroShotAlgo algo, size_t n_users, size_t n_items, const TrainConfig& cfg,
                           TrainStats* stats)
{
    switch (algo) {
    case ZeroShotAlgo::ZeroMat:
        return zeromat_train(n_users, n_items, cfg, stats);
    case ZeroShotAlgo::DotMat:
        return dotmat_train(n_users, n_items, cfg, stats);
    case ZeroShotAlgo::PoissonMat:
        return poissonmat_train(n_users, n_items, cfg, stats);
    }
    throw std::invalid_argument("unknown zero-shot algorithm");
}

PowerMatModel powermat_train(std::span<const ContextSample> contexts, size_t n_users, size_t n_items,
                             const TrainConfig& cfg, const PowerMatParams& params, TrainStats* stats)
{
    cfg.validate();
    if (contexts.empty()) {
        throw std::invalid_argument("PowerMat needs at least one context sample");
    }
    if (!(params.sigma_u > 0.0 && params.sigma_v > 0.0)) {
        throw std::invalid_argument("sigma_u and sigma_v must be positive");
    }
    const size_t dims = contexts.front().context.size();
    if (dims == 0) {
        throw std::invalid_argument("PowerMat needs context vectors of dimension at least 1");
    }
    for (const auto& s : contexts) {
        if (s.context.size() != dims) {
            throw std::invalid_argument("context dimension mismatch: expected " + std::to_string(dims) + ", got " +
                                        std::to_string(s.context.size()));
        }
        if (s.user_id >= n_users || s.item_id >= n_items) {
            throw std::invalid_argument("context sample outside the " + std::to_string(n_users) + " x " +
                                        std::to_string(n_items) + " grid");
        }
    }

    // Canonical visiting order from what the trainer may read: user, item,
    // context. Samples that tie on all three are interchangeable.
    std::vector<size_t> canonical(contexts.size());
    std::iota(canonical.begin(), canonical.end(), size_t{0});
    std::stable_sort(canonical.begin(), canonical.end(), [&](size_t a, size_t b) {
        const auto& x = contexts[a];
        const auto& y = contexts[b];
        if (x.user_id != y.user_id) {
            return x.user_id < y.user_id;
        }
        if (x.item_id != y.item_id) {
            return x.item_id < y.item_id;
        }
        return x.context < y.context;
    });

    FactorModel init = initial_factors(n_users, n_items, cfg);
    Matrix users = init.users();
    Matrix items = init.items();
    std::vector<double> alpha(dims);
    Rng alpha_rng(cfg.seed, kAlphaStream);
    for (auto& a : alpha) {
        a = 0.01 * alpha_rng.uniform(cfg.init_lo, cfg.init_hi);
    }
    double beta = cfg.init_lo;

    std::vector<size_t> order;
    Rng rng(cfg.seed, kSampleStream);
    for (size_t epoch = 0; epoch < cfg.epochs; epoch++) {
        order = canonical;
        rng.shuffle(std::span{order});
        for (size_t idx : order) {
            const auto& s = contexts[idx];
            powermat_step(users.row(s.user_id), items.row(s.item_id), alpha, beta, s.context, cfg, params, stats);
        }
        bool finite = users.all_finite() && items.all_finite() && std::isfinite(beta) &&
                      std::all_of(alpha.begin(), alpha.end(), [](double a) { return std::isfinite(a); });
        if (!finite) {
            throw DivergenceError("powermat", epoch + 1);
        }
    }
    return PowerMatModel{FactorModel(std::move(users), std::move(items)), std::move(alpha), beta, params.sigma_u,
                         params.sigma_v};
}

ZeroShotPredictor::ZeroShotPredictor(FactorModel model, int r_max, double eps_floor)
    : model_(std::move(model)), row_max_(model_.n_users()), r_max_(r_max)
{
    if (!(eps_floor > 0.0)) {
        throw std::invalid_argument("eps_floor must be positive");
    }
    for (size_t u = 0; u < model_.n_users(); u++) {
        double best = eps_floor;
        for (size_t i = 0; i < model_.n_items(); i++) {
            best = std::max(best, model_.score(u, i));
        }
        row_max_[u] = best;
    }
}

double ZeroShotPredictor::predict(size_t user, size_t item) const
{
    return clamp_prediction(r_max_ * (model_.score(user, item) / row_max_[user]), r_max_);
}

double zeroshot_predict(const FactorModel& model, size_t user, size_t item, int r_max, double eps_floor)
{
    double best = eps_floor;
    for (size_t i = 0; i < model.n_items(); i++) {
        best = std::max(best, model.score(user, i));
    }
    return clamp_prediction(r_max * (model.score(user, item) / best), r_max);
}

RatingsDataset densify(const RatingsDataset& train, const ZeroShotPredictor& predictor, double fill_fraction,
                       uint64_t seed)
{
    if (!(fill_fraction >= 0.0 && fill_fraction <= 1.0)) {
        throw std::invalid_argument("fill_fraction must lie in [0, 1]");
    }
    const size_t n_items = train.n_items();
    const size_t grid = train.n_users() * n_items;
    const size_t unobserved = grid - train.size();
    size_t n_fill = static_cast<size_t>(std::llround(fill_fraction * static_cast<double>(train.size())));
    n_fill = std::min(n_fill, unobserved);

    std::unordered_set<uint64_t> observed;
    observed.reserve(train.size() + n_fill);
    for (const auto& r : train.ratings()) {
        observed.insert(static_cast<uint64_t>(r.user_id) * n_items + r.item_id);
    }

    Rng rng(seed, kFillStream);
    std::vector<uint64_t> cells;
    cells.reserve(n_fill);
    if (2 * n_fill <= unobserved) {
        std::unordered_set<uint64_t> chosen;
        while (cells.size() < n_fill) {
            uint64_t cell = rng.below(grid);
            if (!observed.contains(cell) && chosen.insert(cell).second) {
                cells.push_back(cell);
            }
        }
    } else {
        std::vector<uint64_t> free_cells;
        free_cells.reserve(unobserved);
        for (uint64_t cell = 0; cell < grid; cell++) {
            if (!observed.contains(cell)) {
                free_cells.push_back(cell);
            }
        }
        rng.shuffle(std::span{free_cells});
        cells.assign(free_cells.begin(), free_cells.begin() + static_cast<std::ptrdiff_t>(n_fill));
    }

    std::vector<Rating> augmented(train.ratings().begin(), train.ratings().end());
    augmented.reserve(train.size() + n_fill);
    for (uint64_t cell : cells) {
        auto user = static_cast<uint32_t>(cell / n_items);
        auto item = static_cast<uint32_t>(cell % n_items);
        auto value = static_cast<int>(std::lround(predictor.predict(user, item)));
        value = std::clamp(value, 1, train.r_max());
        augmented.push_back(Rating{user, item, value, std::nullopt});
    }
    return RatingsDataset(std::move(augmented), train.n_users(), train.n_items(), train.r_max());
}

FactorModel hybrid_train(const RatingsDataset& train, ZeroShotAlgo algo, const HybridConfig& cfg, TrainStats* stats)
{
    if (train.empty()) {
        throw std::invalid_argument("hybrid training needs a nonempty training set");
    }
    TrainConfig zero_cfg = cfg.zero_shot;
    if (zero_cfg.samples_per_epoch == 0) {
        zero_cfg.samples_per_epoch = train.size();
    }
    ZeroShotPredictor predictor(zeroshot_train(algo, train.n_users(), train.n_items(), zero_cfg, stats),
                                train.r_max(), zero_cfg.eps_floor);
    RatingsDataset augmented = densify(train, predictor, cfg.fill_fraction, zero_cfg.seed);
    return mf_train(augmented, cfg.mf, stats);
}

} // namespace reclab
