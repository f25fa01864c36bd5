#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cqrf/dataset.hpp"
#include "cqrf/forest.hpp"
#include "cqrf/survival.hpp"
#include "cqrf/weights.hpp"

namespace cqrf {

// Which censoring-survival estimate feeds the estimating equation. `unit`
// pins G to 1 — the no-censoring-correction ablation behind the plain
// quantile-forest baselines.
enum class SurvivalKind { beran_forest, km_knn, unit };

struct QuantileQuery {
    std::vector<double> x;
    double tau = 0.5;
    SurvivalKind survival_kind = SurvivalKind::beran_forest;
    std::size_t knn_k = 0;  // km_knn neighbor count; 0 means the full support
};

struct QuantileEstimate {
    double q_hat = 0.0;
    double score_abs = 0.0;  // |S(q_hat)| as the solver evaluated it
    std::size_t candidates_evaluated = 0;
    bool degenerate = false;
};

struct IntervalEstimate {
    double lower = 0.0;
    double upper = 0.0;
    bool swapped = false;     // raw endpoint estimates arrived out of order
    bool degenerate = false;  // either endpoint was flagged
};

// The estimating equation S(q) = (1 - tau) * G(q) - sum_i w_i * 1{y_i > q},
// evaluated right-continuously (y_i = q counts as not exceeding q).
double score(double q, double tau, const SurvivalCurve& g, const WeightVector& w,
             std::span<const double> y);

// Distinct response values carrying positive weight, ascending: the jump
// points of S and therefore the only places its minimizer can sit.
std::vector<double> candidate_set(const WeightVector& w, std::span<const double> y);

// Minimizes |S| over the candidates where Ĝ is still positive. Iterates
// candidates in ascending order and replaces the incumbent only on an
// improvement of more than 1e-12, so exact and near ties resolve to the
// smallest q. Once Ĝ has vanished, S reduces to -(remaining tail mass) and
// crosses an uninformative exact zero at the top candidate; that region is
// consulted only when no positive-curve candidate brings |S| under
// (1 - tau) / 2, and an estimate the vanished tail decides comes back with
// `degenerate` set.
QuantileEstimate solve_quantile(const WeightVector& w, const Dataset& d, double tau,
                                SurvivalKind kind = SurvivalKind::beran_forest,
                                std::size_t knn_k = 0);

// forest_weights + survival curve + candidate argmin for one query point.
QuantileEstimate estimate_quantile(const Forest& f, const Dataset& d,
                                   const QuantileQuery& query);

// Central interval at the given level: quantiles at tau = (1 - level) / 2
// and 1 - (1 - level) / 2. Endpoints are swapped into order when the raw
// estimates cross.
IntervalEstimate interval_from_weights(const WeightVector& w, const Dataset& d,
                                       double level,
                                       SurvivalKind kind = SurvivalKind::beran_forest);
IntervalEstimate prediction_interval(const Forest& f, const Dataset& d,
                                     std::span<const double> x, double level,
                                     SurvivalKind kind = SurvivalKind::beran_forest);

}  // namespace cqrf
