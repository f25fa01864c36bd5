#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "cqrf/dataset.hpp"
#include "cqrf/rng.hpp"
#include "cqrf/simgen.hpp"
#include "cqrf/survival.hpp"
#include "cqrf/weights.hpp"
#include "support/oracles.hpp"

namespace {

cqrf::WeightVector uniform_weights(std::size_t n) {
    cqrf::WeightVector w;
    for (std::size_t i = 0; i < n; ++i)
        w.entries.push_back({static_cast<std::uint32_t>(i), 1.0 / static_cast<double>(n)});
    return w;
}

// Continuous responses, so censoring times never tie: the count-based and
// per-observation product-limit conventions coincide on such data.
cqrf::Dataset continuous_censored(std::size_t n, std::uint64_t seed) {
    cqrf::SplitMix64 g(seed);
    cqrf::Dataset d;
    d.n = n;
    d.p = 1;
    for (std::size_t i = 0; i < n; ++i) {
        d.features.push_back(g.next_double());
        const double t = g.exponential(0.5);
        const double c = g.exponential(0.3);
        d.y.push_back(std::min(t, c));
        d.delta.push_back(t <= c ? 1 : 0);
    }
    return d;
}

}  // namespace

TEST_CASE("curve evaluation is right-continuous with value 1 before the first jump") {
    cqrf::SurvivalCurve curve;
    curve.jump_times = {1.0, 3.0};
    curve.values = {0.8, 0.5};
    CHECK(curve(0.0) == 1.0);
    CHECK(curve(0.999) == 1.0);
    CHECK(curve(1.0) == 0.8);  // value at the jump itself
    CHECK(curve(2.0) == 0.8);
    CHECK(curve(3.0) == 0.5);
    CHECK(curve(100.0) == 0.5);

    const cqrf::SurvivalCurve flat;  // no censoring anywhere
    CHECK(flat(-5.0) == 1.0);
    CHECK(flat(5.0) == 1.0);
}

TEST_CASE("uniformly weighted curve matches the count-based estimator by hand") {
    // y: 1 (event), 2 (censored), 3 (event), 4 (censored).
    cqrf::Dataset d;
    d.n = 4;
    d.p = 1;
    d.features = {0, 0, 0, 0};
    d.y = {1, 2, 3, 4};
    d.delta = {1, 0, 1, 0};

    const cqrf::SurvivalCurve g = cqrf::beran_forest(d, uniform_weights(4));
    REQUIRE(g.jump_times == std::vector<double>{2.0, 4.0});
    // At y=2: 3 of 4 still at risk -> 1 - (1/4)/(3/4) = 2/3.
    CHECK(g.values[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    // At y=4: only itself at risk -> factor 0.
    CHECK(g.values[1] == 0.0);
    CHECK(g(1.0) == 1.0);   // event times do not move G
    CHECK(g(3.999) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("uniformly weighted curve equals textbook kaplan-meier on tie-free data") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        const cqrf::Dataset d = continuous_censored(200, seed);
        const cqrf::SurvivalCurve g = cqrf::beran_forest(d, uniform_weights(d.n));
        const oracles::TextbookKM km(d.y, d.delta);

        REQUIRE(g.jump_times == km.times);
        for (std::size_t j = 0; j < g.jump_times.size(); ++j)
            CHECK(g.values[j] == doctest::Approx(km.values[j]).epsilon(1e-12));

        // Spot-check evaluation at points between jumps too.
        cqrf::SplitMix64 q(seed + 100);
        for (int rep = 0; rep < 50; ++rep) {
            const double at = 10.0 * q.next_double();
            CHECK(g(at) == doctest::Approx(km(at)).epsilon(1e-12));
        }
    }
}

TEST_CASE("curve does not depend on the order weight entries arrive in") {
    const cqrf::Dataset d = continuous_censored(50, 9);
    cqrf::WeightVector w;
    cqrf::SplitMix64 g(10);
    for (std::uint32_t i = 0; i < d.n; ++i) w.entries.push_back({i, 0.1 + g.next_double()});
    const double total = w.sum();
    for (auto& e : w.entries) e.weight /= total;

    cqrf::WeightVector shuffled = w;
    for (std::size_t i = shuffled.entries.size() - 1; i > 0; --i)
        std::swap(shuffled.entries[i], shuffled.entries[g.next_below(i + 1)]);

    const cqrf::SurvivalCurve c1 = cqrf::beran_forest(d, w);
    const cqrf::SurvivalCurve c2 = cqrf::beran_forest(d, shuffled);
    REQUIRE(c1.jump_times == c2.jump_times);
    CHECK(c1.values == c2.values);
}

TEST_CASE("jumps happen only at censored responses and the curve is a step function") {
    const cqrf::Dataset d = continuous_censored(300, 4);
    const cqrf::SurvivalCurve g = cqrf::beran_forest(d, uniform_weights(d.n));

    std::vector<double> censored_y;
    for (std::size_t i = 0; i < d.n; ++i)
        if (d.delta[i] == 0) censored_y.push_back(d.y[i]);
    std::sort(censored_y.begin(), censored_y.end());

    CHECK(g.jump_times == censored_y);  // tie-free data: one jump per censored row
    CHECK(std::is_sorted(g.jump_times.begin(), g.jump_times.end()));
    for (std::size_t j = 0; j < g.values.size(); ++j) {
        CHECK(g.values[j] >= 0.0);
        CHECK(g.values[j] <= 1.0);
        if (j > 0) CHECK(g.values[j] <= g.values[j - 1]);
    }
}

TEST_CASE("tied censoring times share one risk set") {
    // Two censored rows tied at y=2 among four uniform rows. Every member of
    // the tied group divides by the mass at risk where the group starts
    // (3/4), so the curve drops to (1 - 1/3)^2 = 4/9. Both the count-based
    // form 1 - 2/3 and sequential within-group depletion (1 - 1/3)(1 - 1/2)
    // would give 1/3 instead, so this value pins the shared-risk rule.
    cqrf::Dataset d;
    d.n = 4;
    d.p = 1;
    d.features = {0, 0, 0, 0};
    d.y = {1, 2, 2, 3};
    d.delta = {1, 0, 0, 1};
    const cqrf::SurvivalCurve g = cqrf::beran_forest(d, uniform_weights(4));
    REQUIRE(g.jump_times == std::vector<double>{2.0});
    CHECK(g.values[0] == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("km_knn equals the uniformly weighted curve when k covers the support") {
    const cqrf::Dataset d = continuous_censored(80, 5);
    const cqrf::WeightVector w = uniform_weights(d.n);
    const cqrf::SurvivalCurve a = cqrf::km_knn(d, w, d.n);
    const cqrf::SurvivalCurve b = cqrf::beran_forest(d, w);
    CHECK(a.jump_times == b.jump_times);
    CHECK(a.values == b.values);  // bitwise: both run the same core on 1/n masses
}

TEST_CASE("km_knn keeps the k largest weights, breaking rank ties toward lower index") {
    cqrf::Dataset d;
    d.n = 5;
    d.p = 1;
    d.features = {0, 0, 0, 0, 0};
    d.y = {1, 2, 3, 4, 5};
    d.delta = {0, 0, 0, 0, 0};

    cqrf::WeightVector w;
    w.entries = {{0, 0.1}, {1, 0.3}, {2, 0.2}, {3, 0.2}, {4, 0.2}};

    // k = 2: top weights are 0.3 (index 1) and the 0.2 tie -> index 2 wins.
    const cqrf::SurvivalCurve g = cqrf::km_knn(d, w, 2);
    CHECK(g.jump_times == std::vector<double>{2.0, 3.0});
    CHECK(g.values[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(g.values[1] == 0.0);

    CHECK_THROWS_AS(cqrf::km_knn(d, w, 0), std::invalid_argument);
    CHECK_THROWS_AS(cqrf::km_knn(d, w, 6), std::invalid_argument);
}

TEST_CASE("km_knn on k neighbors is classical kaplan-meier over that subset") {
    const cqrf::Dataset d = continuous_censored(60, 6);
    cqrf::WeightVector w;
    cqrf::SplitMix64 g(11);
    for (std::uint32_t i = 0; i < d.n; ++i) w.entries.push_back({i, g.next_double()});

    const std::size_t k = 25;
    const cqrf::SurvivalCurve got = cqrf::km_knn(d, w, k);

    std::vector<cqrf::WeightEntry> ranked = w.entries;
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.weight != b.weight ? a.weight > b.weight : a.index < b.index;
    });
    std::vector<double> sub_y;
    std::vector<std::uint8_t> sub_delta;
    for (std::size_t j = 0; j < k; ++j) {
        sub_y.push_back(d.y[ranked[j].index]);
        sub_delta.push_back(d.delta[ranked[j].index]);
    }
    const oracles::TextbookKM km(sub_y, sub_delta);
    REQUIRE(got.jump_times == km.times);
    for (std::size_t j = 0; j < km.times.size(); ++j)
        CHECK(got.values[j] == doctest::Approx(km.values[j]).epsilon(1e-12));
}

TEST_CASE("beran_forest rejects malformed weight vectors") {
    const cqrf::Dataset d = continuous_censored(10, 7);
    CHECK_THROWS_AS(cqrf::beran_forest(d, cqrf::WeightVector{}), std::invalid_argument);

    cqrf::WeightVector w = uniform_weights(10);
    w.entries[0].weight += 0.5;
    CHECK_THROWS_AS(cqrf::beran_forest(d, w), std::invalid_argument);
}

TEST_CASE("beran_nw box kernel at saturating bandwidth reduces to kaplan-meier") {
    const cqrf::Dataset d = continuous_censored(70, 8);
    cqrf::KernelSpec kernel;
    kernel.bandwidth = 100.0;  // box covers every training point
    kernel.shape = cqrf::KernelShape::box;
    const cqrf::SurvivalCurve g = cqrf::beran_nw(d, std::vector<double>{0.5}, kernel);
    const oracles::TextbookKM km(d.y, d.delta);
    REQUIRE(g.jump_times == km.times);
    for (std::size_t j = 0; j < km.times.size(); ++j)
        CHECK(g.values[j] == doctest::Approx(km.values[j]).epsilon(1e-12));
}

TEST_CASE("beran_nw box kernel weighs exactly the in-window neighbors") {
    cqrf::Dataset d;
    d.n = 4;
    d.p = 1;
    d.features = {0.0, 0.1, 0.2, 5.0};
    d.y = {1, 2, 3, 4};
    d.delta = {0, 0, 1, 0};
    cqrf::KernelSpec kernel;
    kernel.bandwidth = 0.25;
    const cqrf::SurvivalCurve g = cqrf::beran_nw(d, std::vector<double>{0.05}, kernel);
    // Rows 0..2 are inside the window; censored at 1 and 2, event at 3.
    REQUIRE(g.jump_times == std::vector<double>{1.0, 2.0});
    CHECK(g.values[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(g.values[1] == doctest::Approx((2.0 / 3.0) * 0.5).epsilon(1e-15));
}

TEST_CASE("beran_nw gaussian kernel matches a direct weighted product") {
    cqrf::Dataset d;
    d.n = 3;
    d.p = 1;
    d.features = {0.0, 1.0, 2.0};
    d.y = {1, 2, 3};
    d.delta = {0, 0, 0};
    cqrf::KernelSpec kernel;
    kernel.bandwidth = 1.0;
    kernel.shape = cqrf::KernelShape::gaussian;
    const cqrf::SurvivalCurve g = cqrf::beran_nw(d, std::vector<double>{0.0}, kernel);

    const double k0 = 1.0, k1 = std::exp(-0.5), k2 = std::exp(-2.0);
    const double total = k0 + k1 + k2;
    const double f0 = 1.0 - (k0 / total);
    const double f1 = 1.0 - (k1 / total) / ((k1 + k2) / total);
    REQUIRE(g.jump_times.size() == 3);
    CHECK(g.values[0] == doctest::Approx(f0).epsilon(1e-14));
    CHECK(g.values[1] == doctest::Approx(f0 * f1).epsilon(1e-14));
    CHECK(g.values[2] == doctest::Approx(0.0));
}

TEST_CASE("beran_nw rejects bad bandwidths, query sizes, and empty windows") {
    const cqrf::Dataset d = continuous_censored(20, 12);
    cqrf::KernelSpec kernel;
    kernel.bandwidth = 0.0;
    CHECK_THROWS_AS(cqrf::beran_nw(d, std::vector<double>{0.5}, kernel),
                    std::invalid_argument);
    kernel.bandwidth = 0.01;
    CHECK_THROWS_AS(cqrf::beran_nw(d, std::vector<double>{0.5, 0.5}, kernel),
                    std::invalid_argument);
    CHECK_THROWS_AS(cqrf::beran_nw(d, std::vector<double>{500.0}, kernel),
                    std::invalid_argument);  // box window holds no one
}

TEST_CASE("default_bandwidth is the 10% quantile of pairwise distances") {
    cqrf::Dataset d;
    d.n = 5;
    d.p = 1;
    d.features = {0.0, 1.0, 2.0, 4.0, 8.0};
    d.y = {1, 1, 1, 1, 1};
    d.delta = {1, 1, 1, 1, 1};
    // 10 pairwise distances sorted: 1,1,2,2,3,4,4,6,7,8 -> ceil(0.1*10)=1st.
    CHECK(cqrf::default_bandwidth(d) == 1.0);

    cqrf::Dataset one;
    one.n = 1;
    one.p = 1;
    one.features = {0.0};
    one.y = {1.0};
    one.delta = {1};
    CHECK_THROWS_AS(cqrf::default_bandwidth(one), std::invalid_argument);
}

TEST_CASE("forest-weighted curves concentrate toward the local censoring law") {
    // Heterogeneous censoring: C depends on x0. The forest-localized curve at
    // x0 = 1.5 must sit below the one at x0 = 0.5 at moderate q (faster
    // censoring on the right half), a shape a pooled estimate cannot show.
    cqrf::SplitMix64 g(2025);
    cqrf::Dataset d;
    d.n = 1500;
    d.p = 1;
    for (std::size_t i = 0; i < d.n; ++i) {
        const double x = 2.0 * g.next_double();
        const double t = g.exponential(0.2);
        const double c = g.exponential(x < 1.0 ? 0.10 : 0.60);
        d.features.push_back(x);
        d.y.push_back(std::min(t, c));
        d.delta.push_back(t <= c ? 1 : 0);
    }

    cqrf::ForestConfig cfg;
    cfg.num_trees = 120;
    cfg.min_node_size = 40;
    cfg.seed = 31;
    const cqrf::Forest f = cqrf::fit(d, cfg, 1);

    const auto curve_at = [&](double x0) {
        const std::vector<double> x{x0};
        return cqrf::beran_forest(d, cqrf::forest_weights(f, x));
    };
    const cqrf::SurvivalCurve slow = curve_at(0.5);
    const cqrf::SurvivalCurve fast = curve_at(1.5);
    for (double q : {1.0, 2.0, 3.0}) {
        CHECK(fast(q) < slow(q));
        // And both sit in the right neighborhood of exp(-rate * q).
        CHECK(slow(q) == doctest::Approx(std::exp(-0.10 * q)).epsilon(0.25));
        CHECK(fast(q) == doctest::Approx(std::exp(-0.60 * q)).epsilon(0.25));
    }
}
