#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <tuple>
#include <vector>

#include "reclab/core.hpp"
#include "reclab/random.hpp"

namespace reclab::test {

/// Dataset from (user, item, value) triples.
inline RatingsDataset make_dataset(std::initializer_list<std::tuple<uint32_t, uint32_t, int>> cells, size_t n_users,
                                   size_t n_items, int r_max = 5)
{
    std::vector<Rating> ratings;
    for (auto [u, i, v] : cells) {
        ratings.push_back(Rating{u, i, v, std::nullopt});
    }
    return RatingsDataset(std::move(ratings), n_users, n_items, r_max);
}

/// Random ratings on a grid, each cell present with probability `density`.
inline RatingsDataset random_dataset(size_t n_users, size_t n_items, double density, uint64_t seed, int r_max = 5)
{
    Rng rng(seed);
    std::vector<Rating> ratings;
    for (uint32_t u = 0; u < n_users; u++) {
        for (uint32_t i = 0; i < n_items; i++) {
            if (rng.uniform() < density) {
                ratings.push_back(Rating{u, i, 1 + static_cast<int>(rng.below(static_cast<uint64_t>(r_max))),
                                         std::nullopt});
            }
        }
    }
    return RatingsDataset(std::move(ratings), n_users, n_items, r_max);
}

/// Context samples in a CoMoDa-like shape: a few context codes per row,
/// some users rating an item in more than one context.
inline std::vector<ContextSample> random_contexts(size_t n_users, size_t n_items, size_t n_samples, size_t dims,
                                                  uint64_t seed)
{
    Rng rng(seed);
    std::vector<ContextSample> samples;
    for (size_t s = 0; s < n_samples; s++) {
        ContextSample c;
        c.user_id = static_cast<uint32_t>(rng.below(n_users));
        c.item_id = static_cast<uint32_t>(rng.below(n_items));
        c.value = 1 + static_cast<int>(rng.below(5));
        for (size_t d = 0; d < dims; d++) {
            c.context.push_back(static_cast<double>(rng.below(4)));
        }
        samples.push_back(std::move(c));
    }
    return samples;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir
{
public:
    explicit TempDir(const std::string& tag)
    {
        static uint64_t counter = 0;
        auto base = std::filesystem::temp_directory_path();
        Rng rng(static_cast<uint64_t>(std::filesystem::file_time_type::clock::now().time_since_epoch().count()));
        path_ = base / ("reclab-" + tag + "-" + std::to_string(rng.next() % 1000000007) + "-" +
                        std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

} // namespace reclab::test
