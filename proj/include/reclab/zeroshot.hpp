#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "reclab/core.hpp"

namespace reclab {

/// The context-free data-free trainers.
enum class ZeroShotAlgo
{
    ZeroMat,
    DotMat,
    PoissonMat,
};

std::string_view zeroshot_name(ZeroShotAlgo algo);

// Single-cell update rules. Each reads p = U_u . V_j once, guards it, and
// updates both vectors from their pre-update values.

/// U += gamma (V / p - 2U), V += gamma (U / p - 2V), p floored at eps_floor.
void zeromat_step(std::span<double> user, std::span<double> item, const TrainConfig& cfg,
                  TrainStats* stats = nullptr);

/// Simplified DotMat rule, data-free: with p clamped to [eps_floor, p_max]
/// and g = p^p, U -= gamma g sign(g - p) (1 + ln p) V and symmetrically for V.
void dotmat_step(std::span<double> user, std::span<double> item, const TrainConfig& cfg,
                 TrainStats* stats = nullptr);

/// PoissonMat rule: U -= gamma ((p + 1) / p + ln p - 1) V, p floored.
void poissonmat_step(std::span<double> user, std::span<double> item, const TrainConfig& cfg,
                     TrainStats* stats = nullptr);

/// The scalar coefficient shared by both PoissonMat updates.
double poissonmat_coefficient(double p);

struct PowerMatParams
{
    double sigma_u = 1.0;
    double sigma_v = 1.0;
};

/// PowerMat rule for one (user, item, context) sample, s = alpha . c:
///   U     -= gamma (beta p V + (beta p + s) V - (2 / sigma_u) U)
///   V     -= gamma (beta p U + (beta p + s) U - (2 / sigma_v) V)
///   alpha -= gamma p c
///   beta  -= gamma p^2
/// All four from pre-update values; p floored at eps_floor.
void powermat_step(std::span<double> user, std::span<double> item, std::span<double> alpha, double& beta,
                   std::span<const double> context, const TrainConfig& cfg, const PowerMatParams& params,
                   TrainStats* stats = nullptr);

/// Trainers below read the grid shape and the configuration only; no
/// rating value is an input. Each epoch visits cfg.samples_per_epoch cells
/// drawn uniformly from the n_users x n_items grid.
FactorModel zeromat_train(size_t n_users, size_t n_items, const TrainConfig& cfg, TrainStats* stats = nullptr);
FactorModel dotmat_train(size_t n_users, size_t n_items, const TrainConfig& cfg, TrainStats* stats = nullptr);
FactorModel poissonmat_train(size_t n_users, size_t n_items, const TrainConfig& cfg, TrainStats* stats = nullptr);
FactorModel zeroshot_train(ZeroShotAlgo algo, size_t n_users, size_t n_items, const TrainConfig& cfg,
                           TrainStats* stats = nullptr);

/// Context-aware and data-free: visits every sample once per epoch in a
/// seed-shuffled order, reading user, item and context but never the
/// rating value.
PowerMatModel powermat_train(std::span<const ContextSample> contexts, size_t n_users, size_t n_items,
                             const TrainConfig& cfg, const PowerMatParams& params = {},
                             TrainStats* stats = nullptr);

/// Ratio predictor r_max * (U_u . V_i) / m_u, where m_u is the user's
/// largest score over all items (floored at eps_floor), clamped to the
/// scale. Row maxima are computed once at construction.
class ZeroShotPredictor
{
public:
    ZeroShotPredictor(FactorModel model, int r_max, double eps_floor = 1e-6);

    double predict(size_t user, size_t item) const;
    const FactorModel& model() const { return model_; }
    std::span<const double> row_max() const { return row_max_; }

private:
    FactorModel model_;
    std::vector<double> row_max_;
    int r_max_;
};

/// One-off ratio prediction; scans the user's row for its maximum.
double zeroshot_predict(const FactorModel& model, size_t user, size_t item, int r_max, double eps_floor = 1e-6);

struct HybridConfig
{
    TrainConfig zero_shot;
    TrainConfig mf;
    // Filled cells per observed training cell.
    double fill_fraction = 1.0;
};

/// train plus round(fill_fraction * |train|) unobserved cells, chosen
/// uniformly under `seed`, each holding the predictor's rounded rating.
RatingsDataset densify(const RatingsDataset& train, const ZeroShotPredictor& predictor, double fill_fraction,
                       uint64_t seed);

/// Zero-shot model on the training shape, densification with its
/// predictions, then matrix factorization on the augmented data.
FactorModel hybrid_train(const RatingsDataset& train, ZeroShotAlgo algo, const HybridConfig& cfg,
                         TrainStats* stats = nullptr);

} // namespace reclab
