#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "reclab/baselines.hpp"
#include "reclab/ingest.hpp"
#include "reclab/serialize.hpp"
#include "support.hpp"

using namespace reclab;

namespace {

// Straightforward similarity over a dense rating table, 0 marking a gap.
double oracle_similarity(const std::vector<std::vector<int>>& dense, size_t i, size_t j, bool adjusted)
{
    double dot_ij = 0.0;
    double norm_i = 0.0;
    double norm_j = 0.0;
    for (const auto& row : dense) {
        if (row[i] == 0 || row[j] == 0) {
            continue;
        }
        double mean = 0.0;
        if (adjusted) {
            int count = 0;
            for (int r : row) {
                if (r != 0) {
                    mean += r;
                    count++;
                }
            }
            mean /= count;
        }
        double a = row[i] - mean;
        double b = row[j] - mean;
        dot_ij += a * b;
        norm_i += a * a;
        norm_j += b * b;
    }
    if (norm_i == 0.0 || norm_j == 0.0) {
        return 0.0;
    }
    return std::clamp(dot_ij / (std::sqrt(norm_i) * std::sqrt(norm_j)), -1.0, 1.0);
}

std::vector<std::vector<int>> densify_table(const RatingsDataset& data)
{
    std::vector<std::vector<int>> dense(data.n_users(), std::vector<int>(data.n_items(), 0));
    for (const auto& r : data.ratings()) {
        dense[r.user_id][r.item_id] = r.value;
    }
    return dense;
}

RatingsDataset reversed(const RatingsDataset& data)
{
    std::vector<Rating> rows(data.ratings().begin(), data.ratings().end());
    std::reverse(rows.begin(), rows.end());
    return RatingsDataset(std::move(rows), data.n_users(), data.n_items(), data.r_max());
}

RatingsDataset shuffled(const RatingsDataset& data, uint64_t seed)
{
    std::vector<Rating> rows(data.ratings().begin(), data.ratings().end());
    Rng rng(seed);
    rng.shuffle(std::span{rows});
    return RatingsDataset(std::move(rows), data.n_users(), data.n_items(), data.r_max());
}

} // namespace

TEST_CASE("similarity of identical and disjoint items")
{
    auto data = test::make_dataset({{0, 0, 4}, {0, 1, 4}, {1, 0, 2}, {1, 1, 2}, {2, 0, 5}, {2, 1, 5}, {3, 2, 3}}, 4, 3);
    auto sims = item_similarities(data, SimilarityKind::Cosine);
    CHECK(sims(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(sims(0, 2) == 0.0);
    CHECK(sims(1, 2) == 0.0);
    CHECK(sims(0, 0) == 0.0);
}

TEST_CASE("cosine over two shared raters")
{
    auto data = test::make_dataset({{0, 0, 1}, {0, 1, 5}, {1, 0, 5}, {1, 1, 1}}, 2, 2);
    auto sims = item_similarities(data, SimilarityKind::Cosine);
    CHECK(sims(0, 1) == doctest::Approx(10.0 / 26.0).epsilon(1e-15));
    CHECK(sims(0, 1) == doctest::Approx(0.3846).epsilon(1e-4));
}

TEST_CASE("cosine norms use co-raters only")
{
    // User 2 rates item 0 only; that rating must not enter the norm.
    auto data = test::make_dataset({{0, 0, 2}, {0, 1, 2}, {1, 0, 3}, {1, 1, 3}, {2, 0, 5}}, 3, 2);
    auto sims = item_similarities(data, SimilarityKind::Cosine);
    CHECK(sims(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("similarities match a brute-force oracle")
{
    for (uint64_t seed = 1; seed <= 8; seed++) {
        auto data = test::random_dataset(25, 12, 0.35, seed);
        auto dense = densify_table(data);
        for (auto kind : {SimilarityKind::Cosine, SimilarityKind::AdjustedCosine}) {
            auto sims = item_similarities(data, kind);
            bool adjusted = kind == SimilarityKind::AdjustedCosine;
            for (size_t i = 0; i < data.n_items(); i++) {
                for (size_t j = 0; j < data.n_items(); j++) {
                    double expected = i == j ? 0.0 : oracle_similarity(dense, i, j, adjusted);
                    CHECK(sims(i, j) == doctest::Approx(expected).epsilon(1e-12));
                    CHECK(sims(i, j) == sims(j, i));
                    CHECK(sims(i, j) >= -1.0);
                    CHECK(sims(i, j) <= 1.0);
                }
            }
        }
    }
}

TEST_CASE("similarity JSON roundtrip")
{
    auto sims = item_similarities(test::random_dataset(10, 6, 0.5, 3), SimilarityKind::Cosine);
    auto back = similarity_from_json(Json::parse(to_json(sims).dump()));
    CHECK(back.scores() == sims.scores());
}

TEST_CASE("cf_weighted_average examples")
{
    using N = std::vector<std::pair<double, int>>;
    CHECK(*cf_weighted_average(N{{0.8, 4}}) == 4.0);
    CHECK(*cf_weighted_average(N{{1.0, 5}, {1.0, 3}}) == 4.0);
    CHECK(*cf_weighted_average(N{{0.5, 5}, {0.25, 2}}) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK_FALSE(cf_weighted_average(N{}).has_value());
    CHECK_FALSE(cf_weighted_average(N{{0.0, 3}}).has_value());
}

TEST_CASE("cf_weighted_average stays within the neighbors' ratings")
{
    Rng rng(17);
    for (int trial = 0; trial < 2000; trial++) {
        std::vector<std::pair<double, int>> neighbors;
        size_t n = 1 + rng.below(8);
        int lo = 5;
        int hi = 1;
        for (size_t k = 0; k < n; k++) {
            int r = 1 + static_cast<int>(rng.below(5));
            neighbors.emplace_back(rng.uniform(0.001, 1.0), r);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        double avg = *cf_weighted_average(neighbors);
        CHECK(avg >= lo - 1e-12);
        CHECK(avg <= hi + 1e-12);
    }
}

TEST_CASE("cf_predict over a fixed similarity table")
{
    // User 0 rated items 1 (5) and 2 (2); target item 0.
    auto train = test::make_dataset({{0, 1, 5}, {0, 2, 2}, {1, 0, 3}}, 2, 4);
    UserRatings ratings(train);
    Matrix s(4, 4, 0.0);
    auto set = [&](size_t i, size_t j, double v) {
        s(i, j) = v;
        s(j, i) = v;
    };
    set(0, 1, 0.5);
    set(0, 2, 0.25);
    SimilarityMatrix sims(s);
    CHECK(cf_predict(0, 0, sims, ratings, CfConfig{30}) == doctest::Approx(4.0).epsilon(1e-15));
    // Only the strongest neighbor survives a neighborhood of one.
    CHECK(cf_predict(0, 0, sims, ratings, CfConfig{1}) == 5.0);
    // No neighbor with nonzero similarity: global training mean.
    CHECK(cf_predict(0, 3, sims, ratings, CfConfig{30}) == doctest::Approx(10.0 / 3.0));
    CHECK_THROWS_AS(cf_predict(0, 0, sims, ratings, CfConfig{0}), std::invalid_argument);
}

TEST_CASE("cf_predict breaks similarity ties toward the lower item index")
{
    auto train = test::make_dataset({{0, 1, 5}, {0, 2, 1}, {0, 3, 3}}, 1, 4);
    UserRatings ratings(train);
    Matrix s(4, 4, 0.0);
    for (size_t j = 1; j < 4; j++) {
        s(0, j) = 0.6;
        s(j, 0) = 0.6;
    }
    SimilarityMatrix sims(s);
    CHECK(cf_predict(0, 0, sims, ratings, CfConfig{1}) == 5.0);
    CHECK(cf_predict(0, 0, sims, ratings, CfConfig{2}) == 3.0);
}

TEST_CASE("cf_predict is clamped and total")
{
    auto train = test::random_dataset(30, 20, 0.3, 8);
    auto sims = item_similarities(train, SimilarityKind::AdjustedCosine);
    UserRatings ratings(train);
    for (size_t u = 0; u < train.n_users(); u++) {
        for (size_t i = 0; i < train.n_items(); i++) {
            double p = cf_predict(u, i, sims, ratings, CfConfig{5, SimilarityKind::AdjustedCosine});
            CHECK(p >= 1.0);
            CHECK(p <= 5.0);
        }
    }
}

TEST_CASE("mf_predict examples")
{
    FactorModel model(Matrix(2, 2, std::vector<double>{2.0, 0.0, 0.0, 0.0}),
                      Matrix(2, 2, std::vector<double>{1.5, 9.0, 3.1, 0.0}));
    CHECK(mf_predict(model, 0, 0, 5) == 3.0);
    CHECK(model.score(0, 1) == doctest::Approx(6.2));
    CHECK(mf_predict(model, 0, 1, 5) == 5.0);
    CHECK(mf_predict(model, 1, 0, 5) == 1.0);
}

TEST_CASE("mf on a single cell converges to the rating")
{
    auto train = test::make_dataset({{0, 0, 4}}, 1, 1);
    TrainConfig cfg;
    cfg.k = 1;
    cfg.gamma = 0.01;
    cfg.epochs = 2000;
    auto model = mf_train(train, cfg);
    CHECK(std::abs(model.score(0, 0) - 4.0) < 1e-3);
}

TEST_CASE("mf with zero step size returns its initialization")
{
    auto train = test::random_dataset(15, 10, 0.3, 2);
    TrainConfig cfg;
    cfg.gamma = 0.0;
    cfg.epochs = 3;
    auto model = mf_train(train, cfg);
    CHECK(model.bitwise_equal(initial_factors(15, 10, cfg)));
}

TEST_CASE("initial factors lie in the scaled range")
{
    TrainConfig cfg;
    cfg.k = 4;
    auto model = initial_factors(50, 40, cfg);
    for (const auto* m : {&model.users(), &model.items()}) {
        for (double x : m->data()) {
            CHECK(x >= cfg.init_lo / 2.0);
            CHECK(x <= cfg.init_hi / 2.0);
        }
    }
}

TEST_CASE("mf gradient matches central differences")
{
    // Relative error of the analytic gradient at 100 random (model, coordinate) points.
    Rng rng(2024);
    auto data = test::random_dataset(12, 9, 0.4, 77);
    const double h = 1e-5;
    int checked = 0;
    while (checked < 100) {
        Matrix users(12, 3);
        Matrix items(9, 3);
        for (auto& x : users.data()) {
            x = rng.uniform(-1.5, 1.5);
        }
        for (auto& x : items.data()) {
            x = rng.uniform(-1.5, 1.5);
        }
        FactorModel model(users, items);
        auto grad = mf_gradient(model, data);
        for (int probe = 0; probe < 10; probe++, checked++) {
            bool on_users = rng.below(2) == 0;
            size_t row = static_cast<size_t>(rng.below(on_users ? 12 : 9));
            size_t col = static_cast<size_t>(rng.below(3));
            auto loss_at = [&](double delta) {
                Matrix u = users;
                Matrix v = items;
                (on_users ? u : v)(row, col) += delta;
                return mf_loss(FactorModel(u, v), data);
            };
            double numeric = (loss_at(h) - loss_at(-h)) / (2.0 * h);
            double analytic = on_users ? grad.users()(row, col) : grad.items()(row, col);
            double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            CHECK(std::abs(numeric - analytic) / scale < 1e-4);
        }
    }
}

TEST_CASE("one mf step on one rating is a gradient step on that cell")
{
    auto train = test::make_dataset({{0, 0, 5}}, 1, 1);
    FactorModel init(Matrix(1, 2, std::vector<double>{0.3, 0.7}), Matrix(1, 2, std::vector<double>{0.2, 0.4}));
    TrainConfig cfg;
    cfg.k = 2;
    cfg.epochs = 1;
    cfg.gamma = 0.01;
    auto model = mf_train_from(init, train, cfg);
    auto grad = mf_gradient(init, train);
    for (size_t f = 0; f < 2; f++) {
        CHECK(model.user(0)[f] == doctest::Approx(init.user(0)[f] - cfg.gamma * grad.user(0)[f]).epsilon(1e-14));
        CHECK(model.item(0)[f] == doctest::Approx(init.item(0)[f] - cfg.gamma * grad.item(0)[f]).epsilon(1e-14));
    }
}

TEST_CASE("mf ignores input row order")
{
    auto train = test::random_dataset(40, 30, 0.2, 13);
    TrainConfig cfg;
    cfg.epochs = 5;
    auto a = mf_train(train, cfg);
    CHECK(mf_train(reversed(train), cfg).bitwise_equal(a));
    CHECK(mf_train(shuffled(train, 4), cfg).bitwise_equal(a));

    auto sims = item_similarities(train, SimilarityKind::Cosine);
    CHECK(item_similarities(shuffled(train, 9), SimilarityKind::Cosine).scores() == sims.scores());
}

TEST_CASE("mf determinism and seed sensitivity")
{
    auto train = test::random_dataset(20, 20, 0.3, 6);
    TrainConfig cfg;
    cfg.epochs = 3;
    CHECK(mf_train(train, cfg).bitwise_equal(mf_train(train, cfg)));
    TrainConfig other = cfg;
    other.seed = cfg.seed + 1;
    CHECK_FALSE(mf_train(train, other).bitwise_equal(mf_train(train, cfg)));
}

TEST_CASE("mf loss does not increase at the default step on a Zipf dataset")
{
    auto train = generate_zipf(ZipfSpec{1000, 500, 10000, 1.0, 5, 42});
    TrainConfig cfg;
    TrainStats stats;
    auto model = mf_train(train, cfg, &stats);
    REQUIRE(stats.epoch_loss.size() == cfg.epochs);
    CHECK(stats.epoch_loss.front() < mf_loss(initial_factors(1000, 500, cfg), train));
    for (size_t e = 1; e < stats.epoch_loss.size(); e++) {
        CHECK(stats.epoch_loss[e] <= stats.epoch_loss[e - 1]);
    }
    CHECK(mf_loss(model, train) == stats.epoch_loss.back());
}

TEST_CASE("mf divergence is reported with its epoch")
{
    auto train = test::random_dataset(20, 20, 0.5, 6);
    TrainConfig cfg;
    cfg.gamma = 5.0;
    try {
        mf_train(train, cfg);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.epoch() >= 1);
        CHECK(e.epoch() <= cfg.epochs);
    }
    CHECK_THROWS_AS(mf_train(test::make_dataset({}, 2, 2), TrainConfig{}), std::invalid_argument);
}
