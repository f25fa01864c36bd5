#include "cqrf/weights.hpp"

#include <stdexcept>

namespace cqrf {

double WeightVector::sum() const {
    double s = 0.0;
    for (const WeightEntry& e : entries) s += e.weight;
    return s;
}

std::optional<WeightVector> tree_weights(const Tree& tree, std::span<const double> x) {
    const std::vector<std::uint32_t>& members = tree.nodes[tree.route(x)].members;
    if (members.empty()) return std::nullopt;
    WeightVector w;
    w.entries.reserve(members.size());
    const double share = 1.0 / static_cast<double>(members.size());
    for (std::uint32_t i : members) {  // sorted; bootstrap duplicates coalesce
        if (!w.entries.empty() && w.entries.back().index == i)
            w.entries.back().weight += share;
        else
            w.entries.push_back({i, share});
    }
    return w;
}

WeightVector forest_weights(const Forest& f, std::span<const double> x) {
    std::vector<double> acc(f.training_n, 0.0);
    std::size_t contributing = 0;
    for (const Tree& tree : f.trees) {
        const std::vector<std::uint32_t>& members = tree.nodes[tree.route(x)].members;
        if (members.empty()) continue;
        ++contributing;
        const double share = 1.0 / static_cast<double>(members.size());
        for (std::uint32_t i : members) acc[i] += share;
    }
    if (contributing == 0)
        throw std::runtime_error("forest_weights: no tree has weighting samples at x");

    WeightVector w;
    const double scale = 1.0 / static_cast<double>(contributing);
    for (std::uint32_t i = 0; i < f.training_n; ++i)
        if (acc[i] > 0.0) w.entries.push_back({i, acc[i] * scale});
    return w;
}

}  // namespace cqrf
