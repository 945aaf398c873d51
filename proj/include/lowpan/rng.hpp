#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace lowpan {

/// Seeded generator with draws that are identical on every platform.
///
/// std::mt19937_64 output is fixed by the standard, but the std
/// distributions are not, so the few distributions we need are built
/// directly on the raw 64-bit stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi], both inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi)
    {
        if (hi <= lo)
            return lo;
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        // reject the short tail so every value is equally likely
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
        std::uint64_t draw = engine_();
        while (draw >= limit)
            draw = engine_();
        return lo + static_cast<std::int64_t>(draw % span);
    }

    /// True with probability p.
    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 engine_;
};

/// Independent sub-stream seeds derived from one master seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream)
{
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace streams {
inline constexpr std::uint64_t kDeployment = 1;
inline constexpr std::uint64_t kChannel = 2;
inline constexpr std::uint64_t kTraffic = 3;
} // namespace streams

} // namespace lowpan
