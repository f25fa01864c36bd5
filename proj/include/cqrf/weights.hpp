#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cqrf/forest.hpp"

namespace cqrf {

// Sparse locality weights over training indices: entries carry strictly
// positive weights, are sorted by index, and sum to 1 (within rounding) for
// any vector produced by forest_weights.
struct WeightEntry {
    std::uint32_t index;
    double weight;
};

struct WeightVector {
    std::vector<WeightEntry> entries;

    std::size_t support_size() const { return entries.size(); }
    double sum() const;
};

// Weight 1/k on each of the k members of the leaf reached by x. Returns
// nullopt when that leaf is empty (possible in honest trees); callers skip
// such trees.
std::optional<WeightVector> tree_weights(const Tree& tree, std::span<const double> x);

// Average of the per-tree weights over trees whose leaf at x is nonempty.
// Throws when every tree comes up empty, since no estimate is possible then.
WeightVector forest_weights(const Forest& f, std::span<const double> x);

}  // namespace cqrf
