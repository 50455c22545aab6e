#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "reclab/core.hpp"

namespace reclab {

enum class SimilarityKind
{
    Cosine,
    AdjustedCosine,
};

struct CfConfig
{
    size_t neighborhood_size = 30;
    SimilarityKind similarity = SimilarityKind::Cosine;
};

/// Dense symmetric item-item similarity scores.
class SimilarityMatrix
{
public:
    explicit SimilarityMatrix(size_t n_items) : scores_(n_items, n_items, 0.0) {}
    explicit SimilarityMatrix(Matrix scores);

    size_t size() const { return scores_.rows(); }
    double operator()(size_t i, size_t j) const { return scores_(i, j); }
    std::span<const double> row(size_t i) const { return scores_.row(i); }
    const Matrix& scores() const { return scores_; }

private:
    Matrix scores_;
};

/// Item-item similarity over co-rating users. For cosine, both norms are
/// restricted to the users who rated both items. Adjusted cosine first
/// subtracts each user's mean training rating. Pairs without a co-rater
/// score 0; the diagonal is 0 and never used as a neighbor.
SimilarityMatrix item_similarities(const RatingsDataset& train, SimilarityKind kind);

/// Per-user rated items, sorted by item index, plus dataset-wide facts the
/// predictors need.
class UserRatings
{
public:
    struct Entry
    {
        uint32_t item_id;
        int value;
    };

    explicit UserRatings(const RatingsDataset& train);

    std::span<const Entry> of(size_t user) const
    {
        return std::span{entries_}.subspan(offsets_[user], offsets_[user + 1] - offsets_[user]);
    }
    size_t n_users() const { return offsets_.size() - 1; }
    double global_mean() const { return global_mean_; }
    int r_max() const { return r_max_; }

private:
    std::vector<size_t> offsets_;
    std::vector<Entry> entries_;
    double global_mean_;
    int r_max_;
};

/// Item-based CF prediction: similarity-weighted average of the user's
/// ratings over the top neighbors (highest similarity, ties to the lower
/// item index) among the items the user rated with nonzero similarity.
/// Falls back to the global training mean when no neighbor qualifies.
double cf_predict(size_t user, size_t item, const SimilarityMatrix& sims, const UserRatings& ratings,
                  const CfConfig& cfg);

/// Unclamped weighted average over an explicit neighbor list, or nullopt
/// when the absolute similarities sum to zero.
std::optional<double> cf_weighted_average(std::span<const std::pair<double, int>> neighbors);

/// Plain SGD matrix factorization on the squared reconstruction loss,
/// without biases or regularization. Visits the ratings in a seed-shuffled
/// order that does not depend on the input row order.
FactorModel mf_train(const RatingsDataset& train, const TrainConfig& cfg, TrainStats* stats = nullptr);

/// The same loop starting from a given model.
FactorModel mf_train_from(FactorModel initial, const RatingsDataset& train, const TrainConfig& cfg,
                          TrainStats* stats = nullptr);

/// Uniform positive initialization in [init_lo, init_hi] / sqrt(k).
FactorModel initial_factors(size_t n_users, size_t n_items, const TrainConfig& cfg);

double mf_predict(const FactorModel& model, size_t user, size_t item, int r_max);

/// Sum over observed cells of (R - U.V)^2.
double mf_loss(const FactorModel& model, const RatingsDataset& data);

/// Analytic gradient of mf_loss with respect to U and V.
FactorModel mf_gradient(const FactorModel& model, const RatingsDataset& data);

} // namespace reclab
