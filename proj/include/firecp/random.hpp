#pragma once

// Seed derivation and a portable random stream. std::mt19937_64 is fully
// specified by the standard; the distributions below are written out by hand
// so the sequence does not depend on the standard library implementation.

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace firecp {

inline constexpr std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t v) { return splitmix64(seed ^ splitmix64(v)); }
inline constexpr std::uint64_t mix_seed(std::uint64_t seed, std::string_view s) { return mix_seed(seed, fnv1a64(s)); }

/// Stable hash of (seed, parts...), e.g. derive_seed(seed, "augment") or
/// derive_seed(seed, source_id, target_id, repetition).
template <typename... Parts>
constexpr std::uint64_t derive_seed(std::uint64_t seed, const Parts&... parts) {
    std::uint64_t h = splitmix64(seed);
    ((h = mix_seed(h, parts)), ...);
    return h;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform on [0,1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer on [lo, hi], unbiased by rejection.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
        if (range == 0) return static_cast<std::int64_t>(next());
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
        std::uint64_t v;
        do v = next();
        while (v >= limit);
        return lo + static_cast<std::int64_t>(v % range);
    }

    bool bernoulli(double p) { return p >= 1.0 || uniform01() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace firecp
