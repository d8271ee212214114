#include "linesim/kernel/rng.hpp"
#include "linesim/hash.hpp"

#include <cmath>
#include <numbers>

namespace linesim {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double RngStream::normal(double mean, double stddev) {
    if (stddev <= 0.0) return mean;
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + stddev * z;
}

RngStream RngPool::stream(std::string_view label) const {
    return RngStream(splitmix64(seed_ ^ splitmix64(fnv1a(label))));
}

}  // namespace linesim
