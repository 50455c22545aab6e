#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "reclab/core.hpp"

namespace reclab {

/// counts[v - 1] is the number of ratings with value v.
struct RatingHistogram
{
    std::vector<size_t> counts;

    int r_max() const { return static_cast<int>(counts.size()); }
    size_t count(int value) const { return counts.at(static_cast<size_t>(value - 1)); }
    size_t total() const;
};

RatingHistogram rating_histogram(const RatingsDataset& dataset);

/// ln y = log_intercept + exponent * ln x, fitted by ordinary least squares.
struct PowerLawFit
{
    double exponent = 0.0;
    double log_intercept = 0.0;
    double r_squared = 0.0;
};

PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points);

/// count(v) against v over the values that occur at least once.
PowerLawFit fit_histogram(const RatingHistogram& histogram);

/// Ratings per item, sorted in decreasing order, zeros dropped.
std::vector<size_t> item_popularity(const RatingsDataset& dataset);

/// count against rank (1-based) of the item popularity curve. The
/// exponent comes out negative for a decaying curve.
PowerLawFit fit_item_popularity(const RatingsDataset& dataset);

struct DiversityGroup
{
    uint64_t people = 1;          // K_i
    uint64_t movies_watched = 0;  // M_i
};

struct DiversityInput
{
    std::vector<DiversityGroup> groups;
    uint64_t market_size = 1;  // N

    /// Throws std::invalid_argument unless groups is nonempty, every
    /// K_i >= 1 and N >= 1.
    void validate() const;
};

/// ln of sum_i K_i * N^M_i, by log-sum-exp.
double diversity_ordered(const DiversityInput& input);

/// Which factorial divides each term of the order-invariant count.
enum class InvariantDivisor
{
    MarketFactorial,   // N!, as the formula is printed
    WatchedFactorial,  // M_i!, the sequence-permutation alternative
};

/// ln of sum_i K_i * N^M_i / d_i with d_i = N! (default) or M_i!.
double diversity_order_invariant(const DiversityInput& input,
                                 InvariantDivisor divisor = InvariantDivisor::MarketFactorial);

/// Stable ln(sum exp(terms)).
double log_sum_exp(std::span<const double> terms);

} // namespace reclab
