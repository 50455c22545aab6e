#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "reclab/core.hpp"
#include "reclab/random.hpp"
#include "reclab/serialize.hpp"
#include "support.hpp"

using namespace reclab;

TEST_CASE("clamp_prediction keeps values on the scale")
{
    CHECK(clamp_prediction(3.2, 5) == 3.2);
    CHECK(clamp_prediction(-0.4, 5) == 1.0);
    CHECK(clamp_prediction(7.9, 5) == 5.0);
    CHECK(clamp_prediction(1.0, 1) == 1.0);

    Rng rng(3);
    for (int trial = 0; trial < 1000; trial++) {
        double raw = rng.uniform(-100.0, 100.0);
        int r_max = 1 + static_cast<int>(rng.below(10));
        double c = clamp_prediction(raw, r_max);
        CHECK(c >= 1.0);
        CHECK(c <= r_max);
        if (raw >= 1.0 && raw <= r_max) {
            CHECK(c == raw);
        }
    }
}

TEST_CASE("RatingsDataset validates its invariants")
{
    CHECK_NOTHROW(test::make_dataset({{0, 0, 1}, {1, 2, 5}}, 2, 3));
    CHECK_THROWS_AS(test::make_dataset({{2, 0, 3}}, 2, 3), ValidationError);
    CHECK_THROWS_AS(test::make_dataset({{0, 3, 3}}, 2, 3), ValidationError);
    CHECK_THROWS_AS(test::make_dataset({{0, 0, 0}}, 2, 3), ValidationError);
    CHECK_THROWS_AS(test::make_dataset({{0, 0, 6}}, 2, 3), ValidationError);
    CHECK_THROWS_AS(test::make_dataset({{0, 0, 2}, {0, 0, 3}}, 2, 3), ValidationError);
    CHECK_THROWS_AS(test::make_dataset({}, 2, 3, 0), ValidationError);
}

TEST_CASE("RatingsDataset mean")
{
    CHECK(test::make_dataset({}, 1, 1).mean() == 0.0);
    CHECK(test::make_dataset({{0, 0, 1}, {0, 1, 4}}, 1, 2).mean() == 2.5);
}

TEST_CASE("Matrix shape checks and finiteness")
{
    CHECK_THROWS_AS(Matrix(2, 2, std::vector<double>{1.0, 2.0, 3.0}), std::invalid_argument);
    Matrix m(2, 3, 0.5);
    CHECK(m.all_finite());
    m(1, 2) = std::numeric_limits<double>::quiet_NaN();
    CHECK_FALSE(m.all_finite());
    m(1, 2) = std::numeric_limits<double>::infinity();
    CHECK_FALSE(m.all_finite());
}

TEST_CASE("FactorModel requires a shared latent dimension")
{
    CHECK_THROWS_AS(FactorModel(Matrix(2, 3), Matrix(4, 2)), std::invalid_argument);
    CHECK_THROWS_AS(FactorModel(Matrix(2, 0), Matrix(4, 0)), std::invalid_argument);
    FactorModel m(Matrix(1, 2, std::vector<double>{2.0, 0.0}), Matrix(1, 2, std::vector<double>{1.5, 9.0}));
    CHECK(m.score(0, 0) == 3.0);
}

TEST_CASE("TrainConfig validation")
{
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.gamma = 0.0;
    CHECK_NOTHROW(cfg.validate());

    auto broken = [](auto mutate) {
        TrainConfig c;
        mutate(c);
        return c;
    };
    CHECK_THROWS_AS(broken([](TrainConfig& c) { c.gamma = -0.1; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](TrainConfig& c) { c.gamma = std::nan(""); }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](TrainConfig& c) { c.k = 0; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](TrainConfig& c) { c.epochs = 0; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](TrainConfig& c) { c.eps_floor = 0.0; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](TrainConfig& c) { c.init_lo = 0.0; }).validate(), std::invalid_argument);
    CHECK_THROWS_AS(broken([](TrainConfig& c) { c.init_hi = 0.05; }).validate(), std::invalid_argument);
}

TEST_CASE("TrainConfig JSON overrides a base and rejects unknown keys")
{
    TrainConfig base;
    base.epochs = 7;
    auto cfg = train_config_from_json(Json{{"gamma", 0.01}, {"k", 4}}, base);
    CHECK(cfg.gamma == 0.01);
    CHECK(cfg.k == 4);
    CHECK(cfg.epochs == 7);
    CHECK_THROWS_AS(train_config_from_json(Json{{"learning_rate", 0.1}}, base), ParseError);
    CHECK_THROWS_AS(train_config_from_json(Json::array(), base), ParseError);

    auto back = train_config_from_json(to_json(cfg), TrainConfig{});
    CHECK(to_json(back) == to_json(cfg));
}

namespace {

bool same_bits(double a, double b)
{
    return std::memcmp(&a, &b, sizeof a) == 0;
}

FactorModel awkward_model(uint64_t seed)
{
    // Values whose shortest decimal form needs all 17 digits, plus extremes.
    Rng rng(seed);
    Matrix users(5, 3);
    Matrix items(4, 3);
    for (auto& x : users.data()) {
        x = rng.uniform(-1.0, 1.0) * std::pow(10.0, rng.uniform(-300.0, 300.0));
    }
    for (auto& x : items.data()) {
        x = rng.uniform(-2.0, 2.0);
    }
    users(0, 0) = 0.1;
    users(0, 1) = std::numeric_limits<double>::denorm_min();
    users(0, 2) = -0.0;
    items(0, 0) = std::numeric_limits<double>::max();
    return FactorModel(users, items);
}

} // namespace

TEST_CASE("FactorModel JSON roundtrip is bit-exact")
{
    for (uint64_t seed = 1; seed <= 20; seed++) {
        FactorModel model = awkward_model(seed);
        FactorModel back = factor_model_from_json(Json::parse(to_json(model).dump()));
        CHECK(back.bitwise_equal(model));
    }
    FactorModel model = awkward_model(99);
    CHECK(same_bits(factor_model_from_json(to_json(model)).user(0)[2], -0.0));
}

TEST_CASE("FactorModel JSON shape errors")
{
    CHECK_THROWS_AS(factor_model_from_json(Json{{"k", 2}, {"U", {{1.0}}}, {"V", {{1.0, 2.0}}}}), ParseError);
    CHECK_THROWS_AS(factor_model_from_json(Json{{"k", 1}, {"U", {{1.0}}}}), ParseError);
}

TEST_CASE("PowerMatModel JSON roundtrip is bit-exact")
{
    PowerMatModel model{awkward_model(5), {0.001, 1.0 / 3.0, -7e-9}, 0.1 - 1e-17, 1.0, 2.5};
    auto text = to_json(model).dump();
    auto j = Json::parse(text);
    CHECK(j.contains("alpha"));
    CHECK(j.contains("beta"));
    CHECK(j.contains("sigma_u"));
    CHECK(j.contains("sigma_v"));
    CHECK(powermat_model_from_json(j).bitwise_equal(model));

    PowerMatModel other = model;
    other.beta = std::nextafter(model.beta, 1.0);
    CHECK_FALSE(other.bitwise_equal(model));
}

TEST_CASE("bitwise_equal distinguishes signed zero")
{
    FactorModel a(Matrix(1, 1, 0.0), Matrix(1, 1, 1.0));
    FactorModel b(Matrix(1, 1, -0.0), Matrix(1, 1, 1.0));
    CHECK(a == b);
    CHECK_FALSE(a.bitwise_equal(b));
}

TEST_CASE("Rng streams are reproducible and distinct")
{
    Rng a(42, 1);
    Rng b(42, 1);
    Rng c(42, 2);
    bool differs = false;
    for (int i = 0; i < 100; i++) {
        uint64_t x = a.next();
        CHECK(x == b.next());
        differs |= x != c.next();
    }
    CHECK(differs);

    Rng rng(7);
    std::vector<size_t> hits(6, 0);
    for (int i = 0; i < 60000; i++) {
        auto x = rng.below(6);
        REQUIRE(x < 6);
        hits[x]++;
    }
    for (size_t h : hits) {
        CHECK(h > 9500);
        CHECK(h < 10500);
    }
    for (int i = 0; i < 1000; i++) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}
