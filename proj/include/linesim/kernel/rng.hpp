#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace linesim {

// One random stream. Distributions are implemented here rather than via
// <random> distributions so streams are reproducible across standard libraries.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) {
        if (p <= 0.0) return false;
        if (p >= 1.0) return true;
        return uniform() < p;
    }

    // Box-Muller, no cached second value.
    double normal(double mean, double stddev);

private:
    std::mt19937_64 engine_;
};

// Seeded generator partitioned per consumer by a stable label: the stream for
// a label depends only on (seed, label), so adding a consumer leaves the other
// streams untouched.
class RngPool {
public:
    explicit RngPool(std::uint64_t seed) : seed_(seed) {}

    RngStream stream(std::string_view label) const;
    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace linesim
