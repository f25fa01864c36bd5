#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cqrf/dataset.hpp"

namespace cqrf {

enum class SplitRule { cart_variance, grf_quantile };

// gamma is the child-balance floor: every split keeps at least a gamma
// fraction of its parent's splitting sample on each side. mtry = 0 resolves
// to ceil(sqrt(p)) when the forest is fit.
//
// Sampling: subsample_fraction = 1 with honest = false draws a bootstrap
// sample of size n per tree; any other combination draws
// round(subsample_fraction * n) rows without replacement. Honest trees split
// that draw into two disjoint halves, one for choosing splits and one for
// populating leaves.
struct ForestConfig {
    std::uint32_t num_trees = 1000;
    std::uint32_t min_node_size = 20;
    std::uint32_t mtry = 0;
    double subsample_fraction = 1.0;
    bool honest = false;
    double gamma = 0.05;
    SplitRule split_rule = SplitRule::cart_variance;
    std::vector<double> grf_taus{0.1, 0.5, 0.9};
    std::uint64_t seed = 0;

    // cart_variance: bootstrap resampling, not honest.
    // grf_quantile: half subsampling, honest.
    static ForestConfig defaults_for(SplitRule rule);
};

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::vector<std::uint32_t> members;  // leaf weighting sample, ascending

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    // Honest trees only: the half of the subsample used for split search,
    // kept for diagnostics. Not serialized.
    std::vector<std::uint32_t> split_indices;

    // Routes x to its unique leaf: internal nodes send x left iff
    // x[feature] <= threshold. Returns the leaf's node id.
    std::uint32_t route(std::span<const double> x) const;
};

struct Forest {
    ForestConfig config;  // resolved (mtry filled in)
    std::uint32_t training_n = 0;
    std::vector<Tree> trees;
};

struct Split {
    std::uint32_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

struct SplitCandidate {
    double threshold = 0.0;
    double gain = 0.0;
    std::uint32_t left_count = 0;
};

// Every admissible-or-not midpoint threshold for one feature over the node
// sample `idx`, with its gain. cart gain is the between-child variance
// improvement sum_j |C_j| (mean_j - mean_parent)^2; grf gain is the
// heterogeneity score sum_tau sum_j (sum_{i in C_j} rho_i)^2 / |C_j| with
// pseudo-responses rho_i = 1{y_i > q_parent(tau)} - (1 - tau).
std::vector<SplitCandidate> cart_split_candidates(const Dataset& d,
                                                  std::span<const std::uint32_t> idx,
                                                  std::uint32_t feature);
std::vector<SplitCandidate> grf_split_candidates(const Dataset& d,
                                                 std::span<const std::uint32_t> idx,
                                                 std::uint32_t feature,
                                                 std::span<const double> taus);

// Best admissible split over the given candidate features. A split is
// admissible when both children hold at least max(min_node_size,
// gamma * |idx|) sample points. Returns nullopt when the node is pure or no
// admissible split exists (for cart, also when no split has positive gain).
// Ties break toward the feature listed first, then the smallest threshold.
std::optional<Split> best_split_cart(const Dataset& d,
                                     std::span<const std::uint32_t> idx,
                                     std::span<const std::uint32_t> features,
                                     std::uint32_t min_node_size, double gamma);
std::optional<Split> best_split_grf(const Dataset& d,
                                    std::span<const std::uint32_t> idx,
                                    std::span<const std::uint32_t> features,
                                    std::span<const double> taus,
                                    std::uint32_t min_node_size, double gamma);

// Trains num_trees trees on the observed responses. Deterministic for a
// fixed (Dataset, ForestConfig) under any thread count: each tree draws from
// its own stream derived from config.seed and the tree index.
Forest fit(const Dataset& d, ForestConfig cfg, int n_threads = 0);

// Order statistic y_(ceil(tau*k)) of an ascending sample; the node-quantile
// convention used by grf splitting.
double empirical_quantile_sorted(std::span<const double> sorted_values, double tau);

}  // namespace cqrf
