#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace cnnsa {

/// splitmix64 mixing step. Used both as a stream generator and as a
/// one-shot mixer for deriving sub-seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t s = seed ^ (tag * 0xff51afd7ed558ccdULL);
    return splitmix64(s);
}

inline std::uint64_t hash_bytes(std::string_view bytes) {
    // FNV-1a, stable across platforms and runs.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Deterministic RNG with explicit, implementation-pinned draw methods.
/// std::shuffle / std::uniform_real_distribution are unspecified across
/// standard libraries, so reproducible runs go through this engine only.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    /// Uniform integer in [0, n), n >= 1. Rejection-free bounded draw.
    std::uint64_t next_below(std::uint64_t n) {
        // Lemire's multiply-shift; bias is negligible and the result is
        // fully determined by the state, which is what matters here.
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool bernoulli(double p) { return next_double() < p; }

private:
    std::uint64_t state_;
};

/// Fisher-Yates with pinned draw order; deterministic for a given seed.
template <typename T>
void deterministic_shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace cnnsa
