#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "cqrf/dataset.hpp"
#include "cqrf/forest.hpp"
#include "cqrf/rng.hpp"
#include "cqrf/simgen.hpp"
#include "cqrf/weights.hpp"

namespace {

cqrf::Tree leaf_tree(std::vector<std::uint32_t> members) {
    cqrf::Tree t;
    t.nodes.emplace_back();
    t.nodes[0].members = std::move(members);
    return t;
}

// Root split on feature 0 at 0.5; members go to the two leaves.
cqrf::Tree stump_tree(std::vector<std::uint32_t> left, std::vector<std::uint32_t> right) {
    cqrf::Tree t;
    t.nodes.resize(3);
    t.nodes[0].feature = 0;
    t.nodes[0].threshold = 0.5;
    t.nodes[0].left = 1;
    t.nodes[0].right = 2;
    t.nodes[1].members = std::move(left);
    t.nodes[2].members = std::move(right);
    return t;
}

}  // namespace

TEST_CASE("tree_weights spreads 1/k over the leaf the query reaches") {
    const cqrf::Tree t = stump_tree({1, 2, 3}, {0, 4});

    const auto left = cqrf::tree_weights(t, std::vector<double>{0.2});
    REQUIRE(left.has_value());
    REQUIRE(left->entries.size() == 3);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(left->entries[j].index == j + 1);
        CHECK(left->entries[j].weight == 1.0 / 3.0);
    }

    const auto right = cqrf::tree_weights(t, std::vector<double>{0.9});
    REQUIRE(right.has_value());
    REQUIRE(right->entries.size() == 2);
    CHECK(right->entries[0].index == 0);
    CHECK(right->entries[1].index == 4);
    CHECK(right->entries[0].weight == 0.5);

    const auto single = cqrf::tree_weights(leaf_tree({7}), std::vector<double>{0.0});
    REQUIRE(single.has_value());
    REQUIRE(single->entries.size() == 1);
    CHECK(single->entries[0].index == 7);
    CHECK(single->entries[0].weight == 1.0);
}

TEST_CASE("tree_weights coalesces bootstrap multiplicities") {
    const auto w = cqrf::tree_weights(leaf_tree({2, 2, 5}), std::vector<double>{0.0});
    REQUIRE(w.has_value());
    REQUIRE(w->entries.size() == 2);
    CHECK(w->entries[0].index == 2);
    CHECK(w->entries[0].weight == 2.0 / 3.0);
    CHECK(w->entries[1].index == 5);
    CHECK(w->entries[1].weight == 1.0 / 3.0);
    CHECK(w->sum() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("tree_weights reports an empty leaf as nullopt") {
    CHECK_FALSE(cqrf::tree_weights(leaf_tree({}), std::vector<double>{0.0}).has_value());
}

TEST_CASE("forest_weights averages per-tree weights across nonempty trees") {
    cqrf::Forest f;
    f.training_n = 5;
    f.trees.push_back(leaf_tree({1, 2}));
    f.trees.push_back(stump_tree({2, 3}, {0}));

    const cqrf::WeightVector w = cqrf::forest_weights(f, std::vector<double>{0.3});
    REQUIRE(w.entries.size() == 3);
    CHECK(w.entries[0].index == 1);
    CHECK(w.entries[0].weight == 0.25);
    CHECK(w.entries[1].index == 2);
    CHECK(w.entries[1].weight == 0.5);
    CHECK(w.entries[2].index == 3);
    CHECK(w.entries[2].weight == 0.25);
}

TEST_CASE("forest_weights skips empty leaves and renormalizes over the rest") {
    cqrf::Forest f;
    f.training_n = 5;
    f.trees.push_back(leaf_tree({1, 2}));
    f.trees.push_back(leaf_tree({}));  // honest trees can leave a leaf empty

    const cqrf::WeightVector w = cqrf::forest_weights(f, std::vector<double>{0.0});
    REQUIRE(w.entries.size() == 2);
    CHECK(w.entries[0].weight == 0.5);
    CHECK(w.entries[1].weight == 0.5);

    cqrf::Forest empty;
    empty.training_n = 5;
    empty.trees.push_back(leaf_tree({}));
    CHECK_THROWS_AS(cqrf::forest_weights(empty, std::vector<double>{0.0}),
                    std::runtime_error);
}

TEST_CASE("single-leaf forests weight everyone uniformly") {
    cqrf::SimSpec spec;
    spec.model = cqrf::SimModel::aft;
    spec.n = 40;
    spec.p = 2;
    spec.seed = 5;
    const cqrf::Dataset d = cqrf::gen_aft(spec);

    cqrf::ForestConfig cfg;
    cfg.num_trees = 3;
    cfg.min_node_size = 40;  // forces single-leaf trees
    cfg.subsample_fraction = 0.999999;  // without replacement, all rows
    cfg.seed = 6;
    const cqrf::Forest f = cqrf::fit(d, cfg, 1);

    const cqrf::WeightVector w = cqrf::forest_weights(f, d.row(0));
    REQUIRE(w.entries.size() == 40);
    for (const auto& e : w.entries) CHECK(e.weight == doctest::Approx(1.0 / 40.0));
}

TEST_CASE("fitted-forest weights are a sorted probability vector on the member union") {
    cqrf::SimSpec spec;
    spec.model = cqrf::SimModel::hetero;
    spec.n = 200;
    spec.p = 3;
    spec.seed = 7;
    const cqrf::Dataset d = cqrf::generate(spec);

    for (const cqrf::SplitRule rule :
         {cqrf::SplitRule::cart_variance, cqrf::SplitRule::grf_quantile}) {
        auto cfg = cqrf::ForestConfig::defaults_for(rule);
        cfg.num_trees = 50;
        cfg.min_node_size = 10;
        cfg.seed = 8;
        const cqrf::Forest f = cqrf::fit(d, cfg, 1);

        cqrf::SplitMix64 g(1234);
        for (int rep = 0; rep < 100; ++rep) {
            std::vector<double> x(3);
            for (double& v : x) v = 2.0 * g.next_double() - 1.0;

            const cqrf::WeightVector w = cqrf::forest_weights(f, x);
            CHECK(std::abs(w.sum() - 1.0) <= 1e-12);

            std::set<std::uint32_t> support;
            double mean_of_tree_means = 0.0;
            std::size_t contributing = 0;
            for (const cqrf::Tree& t : f.trees) {
                const auto& members = t.nodes[t.route(x)].members;
                if (members.empty()) continue;
                ++contributing;
                double m = 0.0;
                for (std::uint32_t i : members) {
                    support.insert(i);
                    m += d.y[i];
                }
                mean_of_tree_means += m / static_cast<double>(members.size());
            }
            mean_of_tree_means /= static_cast<double>(contributing);

            REQUIRE(w.entries.size() == support.size());
            double weighted_mean = 0.0;
            for (std::size_t j = 0; j < w.entries.size(); ++j) {
                CHECK(w.entries[j].weight > 0.0);
                if (j > 0) CHECK(w.entries[j - 1].index < w.entries[j].index);
                CHECK(support.count(w.entries[j].index) == 1);
                weighted_mean += w.entries[j].weight * d.y[w.entries[j].index];
            }
            // The weighted response mean must equal the average of per-tree
            // leaf means: both reduce the same double sums.
            CHECK(weighted_mean == doctest::Approx(mean_of_tree_means).epsilon(1e-10));
        }
    }
}
