#include "cqrf/survival.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cqrf/forest.hpp"

namespace cqrf {

namespace {

struct AtRisk {
    double y;
    std::uint8_t censored;  // 1 - delta
    double weight;
    std::uint32_t index;
};

// Weighted product-limit curve shared by every estimator. Entries with zero
// weight must already be dropped. Factors see weights only through the
// ratio w_i / (mass still at risk), so the curve is invariant to a common
// positive scaling of the entries.
SurvivalCurve product_limit(std::vector<AtRisk> entries) {
    std::sort(entries.begin(), entries.end(), [](const AtRisk& a, const AtRisk& b) {
        return a.y != b.y ? a.y < b.y : a.index < b.index;
    });

    // Suffix sums give each tied group its risk mass without drift from
    // repeated subtraction.
    const std::size_t n = entries.size();
    std::vector<double> at_risk_mass(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;)
        at_risk_mass[i] = at_risk_mass[i + 1] + entries[i].weight;

    SurvivalCurve curve;
    double value = 1.0;
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo;
        while (hi < n && entries[hi].y == entries[lo].y) ++hi;
        bool jumped = false;
        for (std::size_t i = lo; i < hi; ++i) {
            if (!entries[i].censored) continue;
            value *= 1.0 - entries[i].weight / at_risk_mass[lo];
            jumped = true;
        }
        if (jumped) {
            value = std::clamp(value, 0.0, 1.0);
            curve.jump_times.push_back(entries[lo].y);
            curve.values.push_back(value);
        }
        lo = hi;
    }
    return curve;
}

std::vector<AtRisk> from_weights(const Dataset& d, const WeightVector& w) {
    std::vector<AtRisk> entries;
    entries.reserve(w.entries.size());
    for (const WeightEntry& e : w.entries)
        entries.push_back({d.y[e.index], static_cast<std::uint8_t>(1 - d.delta[e.index]),
                           e.weight, e.index});
    return entries;
}

}  // namespace

double SurvivalCurve::operator()(double q) const {
    const auto it = std::upper_bound(jump_times.begin(), jump_times.end(), q);
    if (it == jump_times.begin()) return 1.0;
    return values[static_cast<std::size_t>(it - jump_times.begin()) - 1];
}

SurvivalCurve beran_nw(const Dataset& d, std::span<const double> x, const KernelSpec& kernel) {
    if (!(kernel.bandwidth > 0.0))
        throw std::invalid_argument("beran_nw: bandwidth must be positive");
    if (x.size() != d.p) throw std::invalid_argument("beran_nw: query size != p");

    std::vector<double> mass(d.n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < d.n; ++i) {
        double dist2 = 0.0;
        for (std::size_t j = 0; j < d.p; ++j) {
            const double diff = d.x(i, j) - x[j];
            dist2 += diff * diff;
        }
        const double u = std::sqrt(dist2) / kernel.bandwidth;
        mass[i] = kernel.shape == KernelShape::box ? (u <= 1.0 ? 1.0 : 0.0)
                                                   : std::exp(-0.5 * u * u);
        total += mass[i];
    }
    if (!(total > 0.0))
        throw std::invalid_argument("beran_nw: no kernel mass at x; widen the bandwidth");

    std::vector<AtRisk> entries;
    for (std::uint32_t i = 0; i < d.n; ++i)
        if (mass[i] > 0.0)
            entries.push_back({d.y[i], static_cast<std::uint8_t>(1 - d.delta[i]),
                               mass[i] / total, i});
    return product_limit(std::move(entries));
}

SurvivalCurve km_knn(const Dataset& d, const WeightVector& w, std::size_t k) {
    if (k == 0 || k > w.support_size())
        throw std::invalid_argument("km_knn: k must lie in [1, weight support size]");

    std::vector<WeightEntry> ranked(w.entries);
    std::sort(ranked.begin(), ranked.end(), [](const WeightEntry& a, const WeightEntry& b) {
        return a.weight != b.weight ? a.weight > b.weight : a.index < b.index;
    });
    ranked.resize(k);

    // Uniform mass on the selected neighbors turns each product-limit ratio
    // weight / (mass at risk) into the count form 1 / #{still at risk}: plain
    // Kaplan-Meier on the neighbor set, computed by the shared core.
    const double share = 1.0 / static_cast<double>(k);
    std::vector<AtRisk> entries;
    entries.reserve(k);
    for (const WeightEntry& e : ranked)
        entries.push_back({d.y[e.index], static_cast<std::uint8_t>(1 - d.delta[e.index]),
                           share, e.index});
    return product_limit(std::move(entries));
}

SurvivalCurve beran_forest(const Dataset& d, const WeightVector& w) {
    if (w.entries.empty()) throw std::invalid_argument("beran_forest: empty weight vector");
    const double total = w.sum();
    if (std::abs(total - 1.0) > 1e-8)
        throw std::invalid_argument("beran_forest: weights must sum to 1");
    return product_limit(from_weights(d, w));
}

double default_bandwidth(const Dataset& d) {
    if (d.n < 2) throw std::invalid_argument("default_bandwidth: need at least 2 rows");
    std::vector<double> dists;
    dists.reserve(d.n * (d.n - 1) / 2);
    for (std::size_t i = 0; i < d.n; ++i)
        for (std::size_t j = i + 1; j < d.n; ++j) {
            double dist2 = 0.0;
            for (std::size_t c = 0; c < d.p; ++c) {
                const double diff = d.x(i, c) - d.x(j, c);
                dist2 += diff * diff;
            }
            dists.push_back(std::sqrt(dist2));
        }
    std::sort(dists.begin(), dists.end());
    return empirical_quantile_sorted(dists, 0.1);
}

}  // namespace cqrf
