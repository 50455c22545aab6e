#include "reclab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace reclab {

size_t RatingHistogram::total() const
{
    return std::accumulate(counts.begin(), counts.end(), size_t{0});
}

RatingHistogram rating_histogram(const RatingsDataset& dataset)
{
    RatingHistogram histogram;
    histogram.counts.assign(static_cast<size_t>(dataset.r_max()), 0);
    for (const auto& r : dataset.ratings()) {
        histogram.counts[static_cast<size_t>(r.value - 1)]++;
    }
    return histogram;
}

PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points)
{
    if (points.size() < 2) {
        throw std::invalid_argument("power-law fit needs at least 2 points");
    }
    const double n = static_cast<double>(points.size());
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (auto [x, y] : points) {
        if (!(x > 0.0 && y > 0.0)) {
            throw std::invalid_argument("power-law fit needs strictly positive coordinates");
        }
        mean_x += std::log(x);
        mean_y += std::log(y);
    }
    mean_x /= n;
    mean_y /= n;

    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (auto [x, y] : points) {
        double dx = std::log(x) - mean_x;
        double dy = std::log(y) - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("power-law fit needs at least two distinct x values");
    }

    PowerLawFit fit;
    fit.exponent = sxy / sxx;
    fit.log_intercept = mean_y - fit.exponent * mean_x;
    double ss_res = 0.0;
    for (auto [x, y] : points) {
        double residual = std::log(y) - (fit.log_intercept + fit.exponent * std::log(x));
        ss_res += residual * residual;
    }
    // A flat response is fitted perfectly by a zero slope.
    fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return fit;
}

PowerLawFit fit_histogram(const RatingHistogram& histogram)
{
    std::vector<std::pair<double, double>> points;
    for (int v = 1; v <= histogram.r_max(); v++) {
        if (histogram.count(v) > 0) {
            points.emplace_back(v, static_cast<double>(histogram.count(v)));
        }
    }
    return fit_power_law(points);
}

std::vector<size_t> item_popularity(const RatingsDataset& dataset)
{
    std::vector<size_t> counts(dataset.n_items(), 0);
    for (const auto& r : dataset.ratings()) {
        counts[r.item_id]++;
    }
    std::sort(counts.begin(), counts.end(), std::greater<>());
    while (!counts.empty() && counts.back() == 0) {
        counts.pop_back();
    }
    return counts;
}

PowerLawFit fit_item_popularity(const RatingsDataset& dataset)
{
    auto counts = item_popularity(dataset);
    std::vector<std::pair<double, double>> points;
    points.reserve(counts.size());
    for (size_t rank = 0; rank < counts.size(); rank++) {
        points.emplace_back(static_cast<double>(rank + 1), static_cast<double>(counts[rank]));
    }
    return fit_power_law(points);
}

void DiversityInput::validate() const
{
    if (groups.empty()) {
        throw std::invalid_argument("diversity needs at least one group");
    }
    if (market_size < 1) {
        throw std::invalid_argument("market size N must be at least 1");
    }
    for (const auto& g : groups) {
        if (g.people < 1) {
            throw std::invalid_argument("every group needs at least one person");
        }
    }
}

double log_sum_exp(std::span<const double> terms)
{
    if (terms.empty()) {
        return -std::numeric_limits<double>::infinity();
    }
    double peak = *std::max_element(terms.begin(), terms.end());
    if (!std::isfinite(peak)) {
        return peak;
    }
    double sum = 0.0;
    for (double t : terms) {
        sum += std::exp(t - peak);
    }
    return peak + std::log(sum);
}

namespace {

std::vector<double> ordered_terms(const DiversityInput& input)
{
    input.validate();
    const double ln_n = std::log(static_cast<double>(input.market_size));
    std::vector<double> terms;
    terms.reserve(input.groups.size());
    for (const auto& g : input.groups) {
        terms.push_back(std::log(static_cast<double>(g.people)) + static_cast<double>(g.movies_watched) * ln_n);
    }
    return terms;
}

double ln_factorial(uint64_t n)
{
    return std::lgamma(static_cast<double>(n) + 1.0);
}

} // namespace

double diversity_ordered(const DiversityInput& input)
{
    auto terms = ordered_terms(input);
    return log_sum_exp(terms);
}

double diversity_order_invariant(const DiversityInput& input, InvariantDivisor divisor)
{
    auto terms = ordered_terms(input);
    if (divisor == InvariantDivisor::MarketFactorial) {
        // Every term shares the N! divisor, so it factors out of the sum.
        return log_sum_exp(terms) - ln_factorial(input.market_size);
    }
    for (size_t i = 0; i < terms.size(); i++) {
        terms[i] -= ln_factorial(input.groups[i].movies_watched);
    }
    return log_sum_exp(terms);
}

} // namespace reclab
