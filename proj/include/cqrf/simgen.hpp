#pragma once

#include <cstdint>

#include "cqrf/dataset.hpp"

namespace cqrf {

enum class SimModel { aft, hetero, sine };

struct SimSpec {
    SimModel model = SimModel::aft;
    std::size_t n = 0;
    std::size_t p = 1;
    std::uint64_t seed = 0;
};

// All generators walk one SplitMix64 stream row by row: the p feature
// uniforms first, then the latent-response draws, then the censoring draw.
// That layout is part of the reproducibility contract; golden files depend
// on it.

// X uniform on [0, 2]^p; log T = x0 + N(0, 0.3^2); C ~ Exp(rate 0.08).
// Roughly 23% of rows come out censored.
Dataset gen_aft(const SimSpec& spec);

// X uniform on [-1, 1]^p; T ~ N(10, (1 + 1{x0 > 0})^2); C ~ 8 + Exp(rate
// 0.10). Variance doubles on the x0 > 0 side; about 20% censoring.
Dataset gen_hetero(const SimSpec& spec);

// Scalar X uniform on (0, 2*pi); T = 2.5 + sin(x) + N(0, 0.3^2);
// C = 1 + sin(x) + Exp(rate 0.2). Requires p = 1; about 25% censoring.
Dataset gen_sine(const SimSpec& spec);

Dataset generate(const SimSpec& spec);

// Overlays exponential censoring on fully-observed data: treats y as the
// latent response, draws C ~ Exp(rate 1 / (rate_multiplier * mean(y))), and
// rewrites (y, delta, latent_t) accordingly. The default multiplier censors
// roughly 40% of typical positive responses.
Dataset inject_censoring(const Dataset& d, double rate_multiplier, std::uint64_t seed);

}  // namespace cqrf
