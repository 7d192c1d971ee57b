#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tgmem {

// splitmix64 step; used to derive well-separated seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic seed derivation: mix_seed(master, {stream, epoch, batch, ...}).
// Every consumer of randomness owns a seed derived this way, so reordering
// unrelated draws can never change another component's stream.
inline std::uint64_t mix_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t p : path) {
        h = splitmix64(h ^ (p + 0x9e3779b97f4a7c15ULL));
    }
    return h;
}

// Stream tags for mix_seed; one per consumer of randomness, so each owns a
// disjoint draw sequence under a shared master seed.
namespace seed_stream {
inline constexpr std::uint64_t kParamInit = 1;
inline constexpr std::uint64_t kTrainNegatives = 2;  // (tag, epoch, batch)
inline constexpr std::uint64_t kValNegatives = 3;    // (tag, batch)
inline constexpr std::uint64_t kTestNegatives = 4;   // (tag, batch)
inline constexpr std::uint64_t kFilterSim = 5;
inline constexpr std::uint64_t kVarianceProbe = 6;
}  // namespace seed_stream

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    double normal(double mean = 0.0, double stddev = 1.0) {
        // Fresh distribution per call: normal_distribution caches a spare
        // variate, and call-site-local state keeps draw sequences independent
        // of unrelated calls.
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace tgmem
