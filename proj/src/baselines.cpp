#include "reclab/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reclab/random.hpp"

namespace reclab {

namespace {

// Stream tags so initialization and visiting order draw from independent
// sequences under one seed.
constexpr uint64_t kInitStream = 0;
constexpr uint64_t kOrderStream = 1;

/// Ratings sorted by (user, item): the canonical order every trainer starts
/// from, so that no result depends on how the input rows were arranged.
std::vector<Rating> canonical_ratings(const RatingsDataset& data)
{
    std::vector<Rating> rows(data.ratings().begin(), data.ratings().end());
    std::sort(rows.begin(), rows.end(), [](const Rating& a, const Rating& b) {
        return a.user_id != b.user_id ? a.user_id < b.user_id : a.item_id < b.item_id;
    });
    return rows;
}

} // namespace

SimilarityMatrix::SimilarityMatrix(Matrix scores) : scores_(std::move(scores))
{
    if (scores_.rows() != scores_.cols()) {
        throw std::invalid_argument("similarity matrix must be square");
    }
}

UserRatings::UserRatings(const RatingsDataset& train)
    : offsets_(train.n_users() + 1, 0), global_mean_(train.mean()), r_max_(train.r_max())
{
    auto rows = canonical_ratings(train);
    entries_.reserve(rows.size());
    for (const auto& r : rows) {
        offsets_[r.user_id + 1]++;
        entries_.push_back(Entry{r.item_id, r.value});
    }
    std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
}

SimilarityMatrix item_similarities(const RatingsDataset& train, SimilarityKind kind)
{
    if (train.empty()) {
        throw std::invalid_argument("item similarities need a nonempty training set");
    }
    const size_t n = train.n_items();
    UserRatings index(train);

    Matrix products(n, n, 0.0);
    // squares(i, j): sum of x_ui^2 over the users who rated both i and j
    Matrix squares(n, n, 0.0);
    std::vector<double> centered;
    for (size_t u = 0; u < index.n_users(); u++) {
        auto rated = index.of(u);
        if (rated.size() < 2) {
            continue;
        }
        double offset = 0.0;
        if (kind == SimilarityKind::AdjustedCosine) {
            int64_t sum = 0;
            for (const auto& e : rated) {
                sum += e.value;
            }
            offset = static_cast<double>(sum) / static_cast<double>(rated.size());
        }
        centered.resize(rated.size());
        for (size_t a = 0; a < rated.size(); a++) {
            centered[a] = rated[a].value - offset;
        }
        for (size_t a = 0; a < rated.size(); a++) {
            size_t ia = rated[a].item_id;
            double xa = centered[a];
            for (size_t b = a + 1; b < rated.size(); b++) {
                size_t ib = rated[b].item_id;
                double xb = centered[b];
                products(ia, ib) += xa * xb;
                squares(ia, ib) += xa * xa;
                squares(ib, ia) += xb * xb;
            }
        }
    }

    Matrix scores(n, n, 0.0);
    for (size_t i = 0; i < n; i++) {
        for (size_t j = i + 1; j < n; j++) {
            // products is filled only above the diagonal since a < b
            // implies item_id[a] < item_id[b] in canonical order.
            double denom = std::sqrt(squares(i, j)) * std::sqrt(squares(j, i));
            double s = denom > 0.0 ? std::clamp(products(i, j) / denom, -1.0, 1.0) : 0.0;
            scores(i, j) = s;
            scores(j, i) = s;
        }
    }
    return SimilarityMatrix(std::move(scores));
}

std::optional<double> cf_weighted_average(std::span<const std::pair<double, int>> neighbors)
{
    double numerator = 0.0;
    double weight = 0.0;
    for (auto [s, r] : neighbors) {
        numerator += s * r;
        weight += std::abs(s);
    }
    if (weight == 0.0) {
        return std::nullopt;
    }
    return numerator / weight;
}

double cf_predict(size_t user, size_t item, const SimilarityMatrix& sims, const UserRatings& ratings,
                  const CfConfig& cfg)
{
    if (cfg.neighborhood_size < 1) {
        throw std::invalid_argument("neighborhood_size must be at least 1");
    }
    struct Candidate
    {
        double s;
        uint32_t item;
        int value;
    };
    std::vector<Candidate> candidates;
    auto row = sims.row(item);
    for (const auto& e : ratings.of(user)) {
        if (e.item_id == item) {
            continue;
        }
        double s = row[e.item_id];
        if (s != 0.0) {
            candidates.push_back(Candidate{s, e.item_id, e.value});
        }
    }
    size_t keep = std::min(cfg.neighborhood_size, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep), candidates.end(),
                      [](const Candidate& a, const Candidate& b) { return a.s != b.s ? a.s > b.s : a.item < b.item; });

    std::vector<std::pair<double, int>> neighbors;
    neighbors.reserve(keep);
    for (size_t n = 0; n < keep; n++) {
        neighbors.emplace_back(candidates[n].s, candidates[n].value);
    }
    auto average = cf_weighted_average(neighbors);
    return clamp_prediction(average.value_or(ratings.global_mean()), ratings.r_max());
}

FactorModel initial_factors(size_t n_users, size_t n_items, const TrainConfig& cfg)
{
    cfg.validate();
    Rng rng(cfg.seed, kInitStream);
    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.k));
    Matrix users(n_users, cfg.k);
    Matrix items(n_items, cfg.k);
    for (auto& x : users.data()) {
        x = rng.uniform(cfg.init_lo, cfg.init_hi) * scale;
    }
    for (auto& x : items.data()) {
        x = rng.uniform(cfg.init_lo, cfg.init_hi) * scale;
    }
    return FactorModel(std::move(users), std::move(items));
}

FactorModel mf_train(const RatingsDataset& train, const TrainConfig& cfg, TrainStats* stats)
{
    return mf_train_from(initial_factors(train.n_users(), train.n_items(), cfg), train, cfg, stats);
}

FactorModel mf_train_from(FactorModel initial, const RatingsDataset& train, const TrainConfig& cfg,
                          TrainStats* stats)
{
    cfg.validate();
    if (train.empty()) {
        throw std::invalid_argument("matrix factorization needs a nonempty training set");
    }
    if (initial.n_users() != train.n_users() || initial.n_items() != train.n_items()) {
        throw std::invalid_argument("initial factors do not match the training shape");
    }
    Matrix users = initial.users();
    Matrix items = initial.items();
    const size_t k = users.cols();

    auto rows = canonical_ratings(train);
    std::vector<size_t> order(rows.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng rng(cfg.seed, kOrderStream);
    std::vector<double> old_user(k);

    for (size_t epoch = 0; epoch < cfg.epochs; epoch++) {
        rng.shuffle(std::span{order});
        for (size_t idx : order) {
            const auto& r = rows[idx];
            auto u = users.row(r.user_id);
            auto v = items.row(r.item_id);
            double step = cfg.gamma * 2.0 * (r.value - dot(u, v));
            std::copy(u.begin(), u.end(), old_user.begin());
            for (size_t f = 0; f < k; f++) {
                u[f] += step * v[f];
                v[f] += step * old_user[f];
            }
        }
        if (!users.all_finite() || !items.all_finite()) {
            throw DivergenceError("mf", epoch + 1);
        }
        if (stats) {
            stats->dot_evaluations += rows.size();
            FactorModel snapshot(users, items);
            stats->epoch_loss.push_back(mf_loss(snapshot, train));
        }
    }
    return FactorModel(std::move(users), std::move(items));
}

double mf_predict(const FactorModel& model, size_t user, size_t item, int r_max)
{
    return clamp_prediction(model.score(user, item), r_max);
}

double mf_loss(const FactorModel& model, const RatingsDataset& data)
{
    double loss = 0.0;
    for (const auto& r : canonical_ratings(data)) {
        double e = r.value - model.score(r.user_id, r.item_id);
        loss += e * e;
    }
    return loss;
}

FactorModel mf_gradient(const FactorModel& model, const RatingsDataset& data)
{
    Matrix grad_users(model.n_users(), model.k(), 0.0);
    Matrix grad_items(model.n_items(), model.k(), 0.0);
    for (const auto& r : canonical_ratings(data)) {
        double e = r.value - model.score(r.user_id, r.item_id);
        auto gu = grad_users.row(r.user_id);
        auto gv = grad_items.row(r.item_id);
        auto u = model.user(r.user_id);
        auto v = model.item(r.item_id);
        for (size_t f = 0; f < model.k(); f++) {
            gu[f] -= 2.0 * e * v[f];
            gv[f] -= 2.0 * e * u[f];
        }
    }
    return FactorModel(std::move(grad_users), std::move(grad_items));
}

} // namespace reclab
