#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace reclab {

/// Seeded generator whose derived draws are identical on every platform.
///
/// The std distributions are implementation-defined, so uniform reals,
/// bounded integers and shuffles are computed here from the raw 64-bit
/// Mersenne Twister stream, which the standard does pin down.
class Rng
{
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    /// Independent stream for a named purpose under the same seed.
    Rng(uint64_t seed, uint64_t stream) : engine_(mix(seed, stream)) {}

    uint64_t next() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), n > 0, without modulo bias.
    uint64_t below(uint64_t n)
    {
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    template<typename T> void shuffle(std::span<T> values)
    {
        for (size_t i = values.size(); i > 1; i--) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    static uint64_t mix(uint64_t seed, uint64_t stream)
    {
        // splitmix64 finalizer over the pair
        uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
};

} // namespace reclab
