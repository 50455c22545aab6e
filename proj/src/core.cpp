#include "reclab/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_set>

namespace reclab {

ParseError::ParseError(const std::string& message, size_t line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line)
{
}

DivergenceError::DivergenceError(const std::string& algorithm, size_t epoch)
    : Error(algorithm + " diverged: non-finite parameter after epoch " + std::to_string(epoch)),
      epoch_(epoch)
{
}

RatingsDataset::RatingsDataset(std::vector<Rating> ratings, size_t n_users, size_t n_items, int r_max)
    : ratings_(std::move(ratings)), n_users_(n_users), n_items_(n_items), r_max_(r_max)
{
    if (r_max_ < 1) {
        throw ValidationError("r_max must be at least 1, got " + std::to_string(r_max_));
    }
    std::unordered_set<uint64_t> seen;
    seen.reserve(ratings_.size());
    for (const auto& r : ratings_) {
        if (r.user_id >= n_users_ || r.item_id >= n_items_) {
            throw ValidationError("rating cell (" + std::to_string(r.user_id) + ", " +
                                  std::to_string(r.item_id) + ") outside " + std::to_string(n_users_) +
                                  " x " + std::to_string(n_items_));
        }
        if (r.value < 1 || r.value > r_max_) {
            throw ValidationError("rating value " + std::to_string(r.value) + " outside [1, " +
                                  std::to_string(r_max_) + "]");
        }
        uint64_t key = static_cast<uint64_t>(r.user_id) * n_items_ + r.item_id;
        if (!seen.insert(key).second) {
            throw ValidationError("duplicate rating for cell (" + std::to_string(r.user_id) + ", " +
                                  std::to_string(r.item_id) + ")");
        }
    }
}

double RatingsDataset::mean() const
{
    if (ratings_.empty()) {
        return 0.0;
    }
    // Integer accumulation keeps the mean independent of row order.
    int64_t sum = 0;
    for (const auto& r : ratings_) {
        sum += r.value;
    }
    return static_cast<double>(sum) / static_cast<double>(ratings_.size());
}

Matrix::Matrix(size_t rows, size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(size_t rows, size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data))
{
    if (data_.size() != rows_ * cols_) {
        throw std::invalid_argument("matrix data size does not match its shape");
    }
}

bool Matrix::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

double dot(std::span<const double> a, std::span<const double> b)
{
    double sum = 0.0;
    for (size_t i = 0; i < a.size(); i++) {
        sum += a[i] * b[i];
    }
    return sum;
}

FactorModel::FactorModel(Matrix users, Matrix items) : users_(std::move(users)), items_(std::move(items))
{
    if (users_.cols() != items_.cols()) {
        throw std::invalid_argument("user and item factors must share the latent dimension");
    }
    if (users_.cols() == 0) {
        throw std::invalid_argument("latent dimension must be at least 1");
    }
}

namespace {

bool same_bits(std::span<const double> a, std::span<const double> b)
{
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size_bytes()) == 0);
}

} // namespace

bool FactorModel::bitwise_equal(const FactorModel& other) const
{
    return users_.rows() == other.users_.rows() && items_.rows() == other.items_.rows() &&
           same_bits(users_.data(), other.users_.data()) && same_bits(items_.data(), other.items_.data());
}

bool PowerMatModel::bitwise_equal(const PowerMatModel& other) const
{
    std::span<const double> b1{&beta, 1};
    std::span<const double> b2{&other.beta, 1};
    return factors.bitwise_equal(other.factors) && same_bits(alpha, other.alpha) && same_bits(b1, b2) &&
           sigma_u == other.sigma_u && sigma_v == other.sigma_v;
}

void TrainConfig::validate() const
{
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
        throw std::invalid_argument("gamma must be a finite non-negative learning rate");
    }
    if (k < 1) {
        throw std::invalid_argument("latent dimension k must be at least 1");
    }
    if (epochs < 1) {
        throw std::invalid_argument("epochs must be at least 1");
    }
    if (!(eps_floor > 0.0)) {
        throw std::invalid_argument("eps_floor must be positive");
    }
    if (!(init_lo > 0.0 && init_lo < init_hi)) {
        throw std::invalid_argument("initialization range must satisfy 0 < init_lo < init_hi");
    }
    if (!(p_max > eps_floor)) {
        throw std::invalid_argument("p_max must exceed eps_floor");
    }
}

double clamp_prediction(double raw, int r_max)
{
    return std::clamp(raw, 1.0, static_cast<double>(r_max));
}

} // namespace reclab
