#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace reclab {

class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when not line oriented.
class ParseError : public Error
{
public:
    ParseError(const std::string& message, size_t line = 0);
    size_t line() const { return line_; }

private:
    size_t line_;
};

/// Well-formed input whose values break a dataset invariant.
class ValidationError : public Error
{
public:
    using Error::Error;
};

/// Tabular input missing a required column.
class SchemaError : public Error
{
public:
    using Error::Error;
};

/// A trainer produced a non-finite parameter.
class DivergenceError : public Error
{
public:
    DivergenceError(const std::string& algorithm, size_t epoch);
    size_t epoch() const { return epoch_; }

private:
    size_t epoch_;
};

struct Rating
{
    uint32_t user_id = 0;
    uint32_t item_id = 0;
    int value = 0;
    // Kept for round-tripping files; no algorithm reads it.
    std::optional<int64_t> timestamp;
};

/// Sparse integer rating matrix. Validated on construction, immutable after.
class RatingsDataset
{
public:
    RatingsDataset(std::vector<Rating> ratings, size_t n_users, size_t n_items, int r_max);

    std::span<const Rating> ratings() const { return ratings_; }
    size_t size() const { return ratings_.size(); }
    bool empty() const { return ratings_.empty(); }
    size_t n_users() const { return n_users_; }
    size_t n_items() const { return n_items_; }
    int r_max() const { return r_max_; }

    /// Mean rating value; 0 for an empty dataset.
    double mean() const;

private:
    std::vector<Rating> ratings_;
    size_t n_users_;
    size_t n_items_;
    int r_max_;
};

struct ContextSample
{
    uint32_t user_id = 0;
    uint32_t item_id = 0;
    int value = 0;
    std::vector<double> context;
};

/// Dense row-major matrix of doubles.
class Matrix
{
public:
    Matrix() = default;
    Matrix(size_t rows, size_t cols, double fill = 0.0);
    Matrix(size_t rows, size_t cols, std::vector<double> data);

    size_t rows() const { return rows_; }
    size_t cols() const { return cols_; }

    std::span<const double> row(size_t i) const { return std::span{data_}.subspan(i * cols_, cols_); }
    std::span<double> row(size_t i) { return std::span{data_}.subspan(i * cols_, cols_); }

    double operator()(size_t i, size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(size_t i, size_t j) { return data_[i * cols_ + j]; }

    std::span<const double> data() const { return data_; }
    std::span<double> data() { return data_; }

    bool all_finite() const;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    size_t rows_ = 0;
    size_t cols_ = 0;
    std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);

/// Latent user factors U (n_users x k) and item factors V (n_items x k).
class FactorModel
{
public:
    FactorModel(Matrix users, Matrix items);

    size_t k() const { return users_.cols(); }
    size_t n_users() const { return users_.rows(); }
    size_t n_items() const { return items_.rows(); }

    const Matrix& users() const { return users_; }
    const Matrix& items() const { return items_; }
    std::span<const double> user(size_t u) const { return users_.row(u); }
    std::span<const double> item(size_t i) const { return items_.row(i); }

    /// Unclamped reconstruction U_u . V_i.
    double score(size_t u, size_t i) const { return reclab::dot(user(u), item(i)); }

    /// True when every stored double has the same bit pattern in both models.
    bool bitwise_equal(const FactorModel& other) const;

    friend bool operator==(const FactorModel&, const FactorModel&) = default;

private:
    Matrix users_;
    Matrix items_;
};

struct PowerMatModel
{
    FactorModel factors;
    std::vector<double> alpha;
    double beta = 0.0;
    double sigma_u = 1.0;
    double sigma_v = 1.0;

    bool bitwise_equal(const PowerMatModel& other) const;
};

struct TrainConfig
{
    double gamma = 0.005;
    size_t k = 10;
    size_t epochs = 30;
    uint64_t seed = 42;
    double eps_floor = 1e-6;
    double init_lo = 0.1;
    double init_hi = 0.9;
    // Cells visited per epoch by the data-free trainers. 0 lets the caller
    // substitute the size of the paired training set.
    size_t samples_per_epoch = 0;
    // Upper clamp on the dot product inside the DotMat power term.
    double p_max = 10.0;

    /// Throws std::invalid_argument on a violated field constraint.
    void validate() const;
};

/// Counters collected while training, for diagnostics and tests.
struct TrainStats
{
    size_t dot_evaluations = 0;
    size_t floor_clamps = 0;
    size_t cap_clamps = 0;
    // Smallest argument handed to a log or a division.
    double min_guarded_argument = std::numeric_limits<double>::infinity();
    // Training loss after each epoch (matrix factorization only).
    std::vector<double> epoch_loss;
};

struct EvalEntry
{
    std::string algorithm;
    double mae = 0.0;
    size_t n_test_predictions = 0;
};

struct EvalReport
{
    std::vector<EvalEntry> entries;
    double split_ratio = 0.2;
    uint64_t seed = 0;
};

/// Clamps a raw prediction onto the rating scale [1, r_max].
double clamp_prediction(double raw, int r_max);

} // namespace reclab
