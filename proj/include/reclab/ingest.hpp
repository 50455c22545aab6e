#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "reclab/core.hpp"

namespace reclab {

/// The two MovieLens layouts differ only in their field separator.
enum class MovieLensFormat
{
    Tab100K,   // user\titem\trating\ttimestamp
    Colons1M,  // user::item::rating::timestamp
};

/// Bidirectional map between raw dataset ids and dense 0-based indices,
/// assigned in order of first appearance.
class IdMap
{
public:
    uint32_t add(std::string_view raw);
    std::optional<uint32_t> find(std::string_view raw) const;
    const std::string& raw(uint32_t index) const { return raw_.at(index); }
    size_t size() const { return raw_.size(); }

private:
    std::unordered_map<std::string, uint32_t> index_;
    std::vector<std::string> raw_;
};

struct ParsedRatings
{
    RatingsDataset dataset;
    IdMap users;
    IdMap items;
    // Repeated (user, item) lines; the last occurrence is kept.
    size_t duplicates_replaced = 0;
};

ParsedRatings parse_movielens(std::istream& source, MovieLensFormat format);
ParsedRatings load_movielens(const std::filesystem::path& path, MovieLensFormat format);

/// Writes one line per rating. Without id maps, indices are written 1-based.
void write_movielens(std::ostream& out, const RatingsDataset& dataset, MovieLensFormat format,
                     const IdMap* users = nullptr, const IdMap* items = nullptr);

struct ContextRatings
{
    ParsedRatings ratings;
    // Every CSV row, including repeated (user, item) pairs seen in
    // different contexts.
    std::vector<ContextSample> samples;
    std::vector<std::string> context_columns;
};

/// Column names used by the default CoMoDa experiments.
std::vector<std::string> default_comoda_context_columns();

/// Parses an LDOS-CoMoDa style CSV with a header row. Requires userID,
/// itemID and rating columns (case-insensitive) plus each requested
/// context column. Context codes pass through as reals; empty, "-1", "NA"
/// and "?" cells are treated as missing and encoded as 0. r_max is the
/// largest rating present.
ContextRatings parse_comoda(std::istream& source, std::span<const std::string> context_columns);
ContextRatings load_comoda(const std::filesystem::path& path, std::span<const std::string> context_columns);

/// Splits one RFC-4180 CSV record. Exposed for tests.
std::vector<std::string> split_csv_record(std::string_view line, size_t line_number = 0);

struct SplitSpec
{
    double test_fraction = 0.2;
    uint64_t seed = 1;
};

struct TrainTestSplit
{
    RatingsDataset train;
    RatingsDataset test;
};

/// Seeded random partition with |test| = round(test_fraction * |dataset|).
/// Both halves keep the parent's shape and scale, and the parent's row order.
TrainTestSplit split(const RatingsDataset& dataset, const SplitSpec& spec);

/// Context samples whose (user, item) cell is present in `dataset`.
std::vector<ContextSample> contexts_for(const RatingsDataset& dataset, std::span<const ContextSample> samples);

struct ZipfSpec
{
    size_t n_users = 1000;
    size_t n_items = 500;
    size_t n_ratings = 10000;
    double exponent = 1.0;
    int r_max = 5;
    uint64_t seed = 42;
};

/// Synthetic ratings: item popularity follows rank^-exponent, users are
/// uniform, and a rating of value v is drawn with probability proportional
/// to v. No cell repeats.
RatingsDataset generate_zipf(const ZipfSpec& spec);

} // namespace reclab
