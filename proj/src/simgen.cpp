#include "cqrf/simgen.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cqrf/rng.hpp"

namespace cqrf {

namespace {

Dataset empty_frame(const SimSpec& spec) {
    if (spec.n == 0) throw std::invalid_argument("generate: n must be positive");
    if (spec.p == 0) throw std::invalid_argument("generate: p must be positive");
    Dataset d;
    d.n = spec.n;
    d.p = spec.p;
    d.features.resize(spec.n * spec.p);
    d.y.resize(spec.n);
    d.delta.resize(spec.n);
    d.latent_t.resize(spec.n);
    return d;
}

void observe(Dataset& d, std::size_t i, double t, double c) {
    d.latent_t[i] = t;
    d.y[i] = std::min(t, c);
    d.delta[i] = t <= c ? 1 : 0;
}

}  // namespace

Dataset gen_aft(const SimSpec& spec) {
    Dataset d = empty_frame(spec);
    SplitMix64 rng(spec.seed);
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (std::size_t j = 0; j < spec.p; ++j)
            d.features[i * spec.p + j] = 2.0 * rng.next_double();
        const double t = std::exp(d.x(i, 0) + rng.normal(0.0, 0.3));
        observe(d, i, t, rng.exponential(0.08));
    }
    validate(d);
    return d;
}

Dataset gen_hetero(const SimSpec& spec) {
    Dataset d = empty_frame(spec);
    SplitMix64 rng(spec.seed);
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (std::size_t j = 0; j < spec.p; ++j)
            d.features[i * spec.p + j] = 2.0 * rng.next_double() - 1.0;
        const double sd = d.x(i, 0) > 0.0 ? 2.0 : 1.0;
        const double t = rng.normal(10.0, sd);
        observe(d, i, t, 8.0 + rng.exponential(0.10));
    }
    validate(d);
    return d;
}

Dataset gen_sine(const SimSpec& spec) {
    if (spec.p != 1) throw std::invalid_argument("gen_sine: requires p = 1");
    Dataset d = empty_frame(spec);
    SplitMix64 rng(spec.seed);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const double x = 2.0 * std::numbers::pi * rng.next_double();
        d.features[i] = x;
        const double t = 2.5 + std::sin(x) + rng.normal(0.0, 0.3);
        observe(d, i, t, 1.0 + std::sin(x) + rng.exponential(0.2));
    }
    validate(d);
    return d;
}

Dataset generate(const SimSpec& spec) {
    switch (spec.model) {
        case SimModel::aft:
            return gen_aft(spec);
        case SimModel::hetero:
            return gen_hetero(spec);
        case SimModel::sine:
            return gen_sine(spec);
    }
    throw std::logic_error("generate: unknown model");
}

Dataset inject_censoring(const Dataset& d, double rate_multiplier, std::uint64_t seed) {
    validate(d);
    if (!(rate_multiplier > 0.0))
        throw std::invalid_argument("inject_censoring: rate_multiplier must be positive");
    for (std::size_t i = 0; i < d.n; ++i)
        if (d.delta[i] != 1)
            throw std::invalid_argument(
                "inject_censoring: input must be fully observed (delta == 1)");

    double mean_y = 0.0;
    for (double v : d.y) mean_y += v;
    mean_y /= static_cast<double>(d.n);
    if (!(mean_y > 0.0))
        throw std::invalid_argument("inject_censoring: mean response must be positive");

    Dataset out = d;
    out.latent_t = d.y;
    const double rate = 1.0 / (rate_multiplier * mean_y);
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < out.n; ++i)
        observe(out, i, d.y[i], rng.exponential(rate));
    validate(out);
    return out;
}

}  // namespace cqrf
