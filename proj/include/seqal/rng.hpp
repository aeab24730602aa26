#pragma once

// Random number utilities with distributions defined here rather than taken
// from <random>, whose distribution algorithms differ between standard
// libraries. Engines: std::mt19937_64 for bulk generation, SplitMix64 for
// short keyed streams.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

namespace seqal::rng {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Folds any number of integer/string keys into one 64-bit seed.
inline std::uint64_t combine(std::uint64_t h) { return mix64(h); }

template <typename... Rest>
std::uint64_t combine(std::uint64_t h, std::string_view s, Rest... rest);

template <typename... Rest>
std::uint64_t combine(std::uint64_t h, std::uint64_t k, Rest... rest) {
    return combine(mix64(h) ^ k, rest...);
}

template <typename... Rest>
std::uint64_t combine(std::uint64_t h, std::string_view s, Rest... rest) {
    return combine(mix64(h) ^ hash_string(s), rest...);
}

class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// Uniform double in [0, 1) from the top 53 bits.
template <typename Engine>
double uniform01(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

template <typename Engine>
double uniform(Engine& eng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(eng);
}

// Uniform integer in [lo, hi] by multiply-shift.
template <typename Engine>
std::int64_t uniform_int(Engine& eng, std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<unsigned __int128>(static_cast<std::uint64_t>(hi - lo) + 1);
    return lo + static_cast<std::int64_t>((static_cast<unsigned __int128>(eng()) * span) >> 64);
}

// Standard normal by Box-Muller (one draw, the sine branch discarded).
template <typename Engine>
double normal(Engine& eng, double mean = 0.0, double sd = 1.0) {
    double u1 = uniform01(eng);
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform01(eng);
    return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename Engine>
bool bernoulli(Engine& eng, double p) {
    return uniform01(eng) < p;
}

}  // namespace seqal::rng
