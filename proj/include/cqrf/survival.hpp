#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cqrf/dataset.hpp"
#include "cqrf/weights.hpp"

namespace cqrf {

// Right-continuous step estimate of the censoring survival function
// G(q | x): value 1 before the first jump, then values[j] at and after
// jump_times[j]. Jumps sit only at censored observations, where the
// product-limit factors bite.
struct SurvivalCurve {
    std::vector<double> jump_times;  // strictly increasing
    std::vector<double> values;      // nonincreasing, within [0, 1]

    double operator()(double q) const;
};

enum class KernelShape { box, gaussian };

struct KernelSpec {
    double bandwidth = 0.0;
    KernelShape shape = KernelShape::box;
};

// Kernel-weighted product-limit (Beran) estimator with Nadaraya-Watson
// weights K(|X_i - x| / a_n) / sum_j K(|X_j - x| / a_n). Reference
// implementation for diagnostics; throws when no kernel mass reaches x.
SurvivalCurve beran_nw(const Dataset& d, std::span<const double> x, const KernelSpec& kernel);

// Kaplan-Meier over the k training points with the largest weights (ties at
// the k-th rank break toward the lower index), each counted uniformly.
SurvivalCurve km_knn(const Dataset& d, const WeightVector& w, std::size_t k);

// Product-limit estimator driven directly by normalized forest weights:
// G(q) = prod_{y_i <= q} (1 - w_i / sum_{y_j >= y_i} w_j)^(1 - delta_i).
// Tied y values share one risk set, with factors applied in index order.
SurvivalCurve beran_forest(const Dataset& d, const WeightVector& w);

// Diagnostic default for beran_nw: the 10% quantile of pairwise feature
// distances. Quadratic in n; intended for small reference runs only.
double default_bandwidth(const Dataset& d);

}  // namespace cqrf
