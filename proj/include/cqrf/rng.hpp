#pragma once

#include <cmath>
#include <cstdint>

namespace cqrf {

// SplitMix64 (Steele/Lea/Flood). The generator is pinned here, rather than a
// std:: engine, so the exact uniform stream is part of the documented output
// format: seeded runs reproduce bit-for-bit on any platform.
//
// Derived draws and their uniform consumption:
//   next_double()      1 draw, uniform on [0,1) with 53-bit resolution
//   next_below(b)      1 draw, integer in [0,b) via multiply-shift
//   normal(m,s)        2 draws, Box-Muller (cosine branch only)
//   exponential(rate)  1 draw, inverse CDF
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    std::uint64_t next_below(std::uint64_t bound) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * bound) >> 64);
    }

    double normal(double mean, double sd) {
        constexpr double two_pi = 6.28318530717958647692;
        const double u1 = 1.0 - next_double();  // (0,1], keeps log() finite
        const double u2 = next_double();
        return mean + sd * std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    double exponential(double rate) { return -std::log1p(-next_double()) / rate; }

private:
    std::uint64_t state_;
};

// Per-stream seeds for parallel work (one stream per tree, per benchmark cell,
// ...). Results must not depend on which thread runs which stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    SplitMix64 g(master ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    return g.next();
}

}  // namespace cqrf
