#include "cqrf/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cqrf/parallel.hpp"
#include "cqrf/rng.hpp"

namespace cqrf {

namespace {

// Node sample entry sorted by (feature value, row index) so sweeps are
// deterministic under duplicate feature values.
struct ValueRow {
    double value;
    std::uint32_t row;
};

void sort_by_feature(const Dataset& d, std::span<const std::uint32_t> idx,
                     std::uint32_t feature, std::vector<ValueRow>& out) {
    out.resize(idx.size());
    for (std::size_t j = 0; j < idx.size(); ++j)
        out[j] = {d.x(idx[j], feature), idx[j]};
    std::sort(out.begin(), out.end(), [](const ValueRow& a, const ValueRow& b) {
        return a.value != b.value ? a.value < b.value : a.row < b.row;
    });
}

// Midpoint of two consecutive distinct feature values, pulled back to the
// lower value when rounding would otherwise misroute the upper one.
double split_threshold(double lo, double hi) {
    double thr = lo + 0.5 * (hi - lo);
    return thr < hi ? thr : lo;
}

// Shared gain sweep. rho holds m pseudo-response columns aligned with the
// sorted node sample: rho[c * k + j] belongs to sorted[j]. For every boundary
// between distinct feature values, emits
//   gain = sum_c [ L_c^2 / n_left + (T_c - L_c)^2 / n_right ]
// where L_c is the left running sum and T_c the node total of column c.
void sweep_gains(const std::vector<ValueRow>& sorted, const std::vector<double>& rho,
                 std::size_t m, std::vector<SplitCandidate>& out) {
    const std::size_t k = sorted.size();
    out.clear();
    if (k < 2) return;

    std::vector<double> total(m, 0.0), left(m, 0.0);
    for (std::size_t c = 0; c < m; ++c)
        for (std::size_t j = 0; j < k; ++j) total[c] += rho[c * k + j];

    for (std::size_t j = 0; j + 1 < k; ++j) {
        for (std::size_t c = 0; c < m; ++c) left[c] += rho[c * k + j];
        if (sorted[j].value == sorted[j + 1].value) continue;
        const double nl = static_cast<double>(j + 1);
        const double nr = static_cast<double>(k - (j + 1));
        double gain = 0.0;
        for (std::size_t c = 0; c < m; ++c) {
            const double r = total[c] - left[c];
            gain += left[c] * left[c] / nl + r * r / nr;
        }
        out.push_back({split_threshold(sorted[j].value, sorted[j + 1].value), gain,
                       static_cast<std::uint32_t>(j + 1)});
    }
}

bool node_is_pure(const Dataset& d, std::span<const std::uint32_t> idx) {
    for (std::size_t j = 1; j < idx.size(); ++j)
        if (d.y[idx[j]] != d.y[idx[0]]) return false;
    return true;
}

std::optional<Split> pick_best(const Dataset& d, std::span<const std::uint32_t> idx,
                               std::span<const std::uint32_t> features,
                               std::span<const double> taus, SplitRule rule,
                               std::uint32_t min_node_size, double gamma) {
    const std::size_t k = idx.size();
    if (k < 2 || node_is_pure(d, idx)) return std::nullopt;

    const double min_child =
        std::max(static_cast<double>(min_node_size), gamma * static_cast<double>(k));
    std::optional<Split> best;
    // cart demands a strictly positive variance improvement; grf takes the
    // most heterogeneous admissible split regardless of its absolute score.
    double best_gain = rule == SplitRule::cart_variance ? 0.0 : -1.0;

    std::vector<SplitCandidate> cands;
    for (std::uint32_t f : features) {
        cands = rule == SplitRule::cart_variance
                    ? cart_split_candidates(d, idx, f)
                    : grf_split_candidates(d, idx, f, taus);
        for (const SplitCandidate& c : cands) {
            const double nl = static_cast<double>(c.left_count);
            const double nr = static_cast<double>(k - c.left_count);
            if (nl < min_child || nr < min_child) continue;
            if (c.gain > best_gain) {
                best_gain = c.gain;
                best = Split{f, c.threshold, c.gain};
            }
        }
    }
    return best;
}

struct TreeBuilder {
    const Dataset& d;
    const ForestConfig& cfg;
    SplitMix64& rng;
    std::vector<std::uint32_t>& sample;      // permuted in place while growing
    std::vector<std::uint32_t> feature_pool; // always a permutation of 0..p-1
    std::vector<std::uint32_t> drawn;
    bool keep_members;                        // false while growing honest trees
    Tree tree;

    TreeBuilder(const Dataset& data, const ForestConfig& config, SplitMix64& r,
                std::vector<std::uint32_t>& smpl, bool keep)
        : d(data), cfg(config), rng(r), sample(smpl), feature_pool(data.p),
          keep_members(keep) {
        std::iota(feature_pool.begin(), feature_pool.end(), 0u);
    }

    std::span<const std::uint32_t> draw_features() {
        const std::size_t p = feature_pool.size();
        for (std::size_t j = 0; j < cfg.mtry; ++j)
            std::swap(feature_pool[j], feature_pool[j + rng.next_below(p - j)]);
        drawn.assign(feature_pool.begin(), feature_pool.begin() + cfg.mtry);
        std::sort(drawn.begin(), drawn.end());
        return drawn;
    }

    std::int32_t grow(std::size_t begin, std::size_t end) {
        const auto id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        const std::size_t k = end - begin;
        const std::span<const std::uint32_t> idx(sample.data() + begin, k);

        std::optional<Split> split;
        if (k >= 2 * static_cast<std::size_t>(cfg.min_node_size)) {
            const auto feats = draw_features();
            split = cfg.split_rule == SplitRule::cart_variance
                        ? best_split_cart(d, idx, feats, cfg.min_node_size, cfg.gamma)
                        : best_split_grf(d, idx, feats, cfg.grf_taus, cfg.min_node_size,
                                         cfg.gamma);
        }
        if (!split) {
            if (keep_members) {
                auto& m = tree.nodes[id].members;
                m.assign(idx.begin(), idx.end());
                std::sort(m.begin(), m.end());
            }
            return id;
        }

        const auto mid = std::partition(sample.begin() + static_cast<std::ptrdiff_t>(begin),
                                        sample.begin() + static_cast<std::ptrdiff_t>(end),
                                        [&](std::uint32_t r) {
                                            return d.x(r, split->feature) <= split->threshold;
                                        }) -
                         sample.begin();
        const std::int32_t left = grow(begin, static_cast<std::size_t>(mid));
        const std::int32_t right = grow(static_cast<std::size_t>(mid), end);
        TreeNode& node = tree.nodes[id];
        node.feature = static_cast<std::int32_t>(split->feature);
        node.threshold = split->threshold;
        node.left = left;
        node.right = right;
        return id;
    }
};

Tree build_tree(const Dataset& d, const ForestConfig& cfg, std::uint64_t seed) {
    SplitMix64 rng(seed);
    const std::size_t n = d.n;
    const bool bootstrap = !cfg.honest && cfg.subsample_fraction == 1.0;

    std::vector<std::uint32_t> sample;
    if (bootstrap) {
        sample.resize(n);
        for (auto& s : sample) s = static_cast<std::uint32_t>(rng.next_below(n));
    } else {
        const auto s =
            static_cast<std::size_t>(std::llround(cfg.subsample_fraction * static_cast<double>(n)));
        std::vector<std::uint32_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        for (std::size_t j = 0; j < s; ++j)
            std::swap(order[j], order[j + rng.next_below(n - j)]);
        sample.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s));
    }

    std::vector<std::uint32_t> estimation;
    if (cfg.honest) {
        const std::size_t half = (sample.size() + 1) / 2;  // split half gets the ceil
        estimation.assign(sample.begin() + static_cast<std::ptrdiff_t>(half), sample.end());
        sample.resize(half);
        std::sort(estimation.begin(), estimation.end());
    }

    TreeBuilder builder(d, cfg, rng, sample, /*keep_members=*/!cfg.honest);
    builder.grow(0, sample.size());
    Tree tree = std::move(builder.tree);

    if (cfg.honest) {
        tree.split_indices.assign(sample.begin(), sample.end());
        std::sort(tree.split_indices.begin(), tree.split_indices.end());
        for (std::uint32_t row : estimation)  // ascending, so members stay sorted
            tree.nodes[tree.route(d.row(row))].members.push_back(row);
    }
    return tree;
}

void check_config(const Dataset& d, const ForestConfig& cfg) {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("fit: " + msg); };
    if (cfg.num_trees == 0) fail("num_trees must be positive");
    if (cfg.min_node_size == 0) fail("min_node_size must be positive");
    if (cfg.min_node_size > d.n)
        fail("min_node_size " + std::to_string(cfg.min_node_size) + " exceeds n = " +
             std::to_string(d.n));
    if (cfg.mtry > d.p)
        fail("mtry " + std::to_string(cfg.mtry) + " exceeds p = " + std::to_string(d.p));
    if (!(cfg.gamma > 0.0 && cfg.gamma <= 0.5)) fail("gamma must lie in (0, 0.5]");
    if (!(cfg.subsample_fraction > 0.0 && cfg.subsample_fraction <= 1.0))
        fail("subsample_fraction must lie in (0, 1]");
    if (!(!cfg.honest && cfg.subsample_fraction == 1.0)) {
        const auto s = std::llround(cfg.subsample_fraction * static_cast<double>(d.n));
        if (s < 2) fail("subsample_fraction draws fewer than 2 rows");
    }
    if (cfg.split_rule == SplitRule::grf_quantile) {
        if (cfg.grf_taus.empty()) fail("grf_taus must be non-empty");
        for (double t : cfg.grf_taus)
            if (!(t > 0.0 && t < 1.0)) fail("grf_taus entries must lie in (0, 1)");
    }
}

}  // namespace

ForestConfig ForestConfig::defaults_for(SplitRule rule) {
    ForestConfig cfg;
    cfg.split_rule = rule;
    if (rule == SplitRule::grf_quantile) {
        cfg.subsample_fraction = 0.5;
        cfg.honest = true;
    }
    return cfg;
}

std::uint32_t Tree::route(std::span<const double> x) const {
    std::uint32_t id = 0;
    while (!nodes[id].is_leaf()) {
        const TreeNode& nd = nodes[id];
        id = static_cast<std::uint32_t>(
            x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right);
    }
    return id;
}

double empirical_quantile_sorted(std::span<const double> sorted_values, double tau) {
    const std::size_t k = sorted_values.size();
    if (k == 0) throw std::invalid_argument("empirical_quantile_sorted: empty sample");
    // Nudge below the product so exact multiples do not round up a rank.
    auto rank = static_cast<std::size_t>(std::ceil(tau * static_cast<double>(k) - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, k);
    return sorted_values[rank - 1];
}

std::vector<SplitCandidate> cart_split_candidates(const Dataset& d,
                                                  std::span<const std::uint32_t> idx,
                                                  std::uint32_t feature) {
    const std::size_t k = idx.size();
    std::vector<ValueRow> sorted;
    sort_by_feature(d, idx, feature, sorted);

    double mean = 0.0;
    for (std::uint32_t r : idx) mean += d.y[r];
    mean /= static_cast<double>(k);

    std::vector<double> rho(k);
    for (std::size_t j = 0; j < k; ++j) rho[j] = d.y[sorted[j].row] - mean;

    std::vector<SplitCandidate> out;
    sweep_gains(sorted, rho, 1, out);
    return out;
}

std::vector<SplitCandidate> grf_split_candidates(const Dataset& d,
                                                 std::span<const std::uint32_t> idx,
                                                 std::uint32_t feature,
                                                 std::span<const double> taus) {
    const std::size_t k = idx.size();
    const std::size_t m = taus.size();
    std::vector<ValueRow> sorted;
    sort_by_feature(d, idx, feature, sorted);

    std::vector<double> node_y(k);
    for (std::size_t j = 0; j < k; ++j) node_y[j] = d.y[idx[j]];
    std::sort(node_y.begin(), node_y.end());

    std::vector<double> rho(m * k);
    for (std::size_t c = 0; c < m; ++c) {
        const double q = empirical_quantile_sorted(node_y, taus[c]);
        const double below = taus[c] - 1.0;  // 1{y > q} - (1 - tau)
        for (std::size_t j = 0; j < k; ++j)
            rho[c * k + j] = d.y[sorted[j].row] > q ? taus[c] : below;
    }

    std::vector<SplitCandidate> out;
    sweep_gains(sorted, rho, m, out);
    return out;
}

std::optional<Split> best_split_cart(const Dataset& d, std::span<const std::uint32_t> idx,
                                     std::span<const std::uint32_t> features,
                                     std::uint32_t min_node_size, double gamma) {
    return pick_best(d, idx, features, {}, SplitRule::cart_variance, min_node_size, gamma);
}

std::optional<Split> best_split_grf(const Dataset& d, std::span<const std::uint32_t> idx,
                                    std::span<const std::uint32_t> features,
                                    std::span<const double> taus,
                                    std::uint32_t min_node_size, double gamma) {
    return pick_best(d, idx, features, taus, SplitRule::grf_quantile, min_node_size, gamma);
}

Forest fit(const Dataset& d, ForestConfig cfg, int n_threads) {
    validate(d);
    if (cfg.mtry == 0)
        cfg.mtry = static_cast<std::uint32_t>(
            std::ceil(std::sqrt(static_cast<double>(d.p))));
    check_config(d, cfg);

    Forest forest;
    forest.config = cfg;
    forest.training_n = static_cast<std::uint32_t>(d.n);
    forest.trees.resize(cfg.num_trees);
    parallel_for(cfg.num_trees, n_threads, [&](std::size_t b) {
        forest.trees[b] = build_tree(d, cfg, derive_seed(cfg.seed, b));
    });
    return forest;
}

}  // namespace cqrf
