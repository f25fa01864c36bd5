#include "cqrf/quantile.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace cqrf {

namespace {

constexpr double kTieEps = 1e-12;

SurvivalCurve curve_for(const WeightVector& w, const Dataset& d, SurvivalKind kind,
                        std::size_t knn_k) {
    switch (kind) {
        case SurvivalKind::beran_forest:
            return beran_forest(d, w);
        case SurvivalKind::km_knn:
            return km_knn(d, w, knn_k == 0 ? w.support_size() : knn_k);
        case SurvivalKind::unit:
            return SurvivalCurve{};  // no jumps: G == 1 everywhere
    }
    throw std::logic_error("curve_for: unknown survival kind");
}

}  // namespace

double score(double q, double tau, const SurvivalCurve& g, const WeightVector& w,
             std::span<const double> y) {
    double tail = 0.0;
    for (const WeightEntry& e : w.entries)
        if (y[e.index] > q) tail += e.weight;
    return (1.0 - tau) * g(q) - tail;
}

std::vector<double> candidate_set(const WeightVector& w, std::span<const double> y) {
    std::vector<double> cands;
    cands.reserve(w.entries.size());
    for (const WeightEntry& e : w.entries) cands.push_back(y[e.index]);
    std::sort(cands.begin(), cands.end());
    cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
    return cands;
}

QuantileEstimate solve_quantile(const WeightVector& w, const Dataset& d, double tau,
                                SurvivalKind kind, std::size_t knn_k) {
    if (!(tau > 0.0 && tau < 1.0))
        throw std::invalid_argument("solve_quantile: tau must lie in (0, 1)");
    if (w.entries.empty()) throw std::invalid_argument("solve_quantile: empty weights");

    const SurvivalCurve curve = curve_for(w, d, kind, knn_k);

    // Candidates with their weight mass, grouped over tied responses.
    std::vector<WeightEntry> by_y(w.entries);
    std::sort(by_y.begin(), by_y.end(), [&](const WeightEntry& a, const WeightEntry& b) {
        return d.y[a.index] != d.y[b.index] ? d.y[a.index] < d.y[b.index]
                                            : a.index < b.index;
    });
    std::vector<double> cands, mass;
    for (const WeightEntry& e : by_y) {
        if (cands.empty() || d.y[e.index] != cands.back()) {
            cands.push_back(d.y[e.index]);
            mass.push_back(e.weight);
        } else {
            mass.back() += e.weight;
        }
    }

    const std::size_t m = cands.size();
    std::vector<double> tail(m);  // weight strictly above each candidate
    double above = 0.0;
    for (std::size_t j = m; j-- > 0;) {
        tail[j] = above;
        above += mass[j];
    }

    // Where Ĝ has vanished, S collapses to -(remaining tail mass) and hits an
    // exact but uninformative zero at the top candidate: past the largest
    // censored response the equation carries no information about T. The
    // minimizer is therefore taken over candidates with Ĝ > 0; the vanished
    // region only decides the estimate when even the informative region
    // cannot push |S| below (1 - tau) / 2, and that estimate is flagged.
    QuantileEstimate est;
    est.candidates_evaluated = m;
    double best = std::numeric_limits<double>::infinity();
    double best_anywhere = std::numeric_limits<double>::infinity();
    double q_anywhere = 0.0;
    bool have_surviving = false;
    std::size_t jump = 0;
    double g = 1.0;
    for (std::size_t j = 0; j < m; ++j) {
        while (jump < curve.jump_times.size() && curve.jump_times[jump] <= cands[j])
            g = curve.values[jump++];
        const double s = std::abs((1.0 - tau) * g - tail[j]);
        if (g > 0.0 && s < best - kTieEps) {
            best = s;
            est.q_hat = cands[j];
            have_surviving = true;
        }
        if (s < best_anywhere - kTieEps) {
            best_anywhere = s;
            q_anywhere = cands[j];
        }
    }
    est.score_abs = best;
    if (!have_surviving || best > (1.0 - tau) / 2.0) {
        est.q_hat = q_anywhere;
        est.score_abs = best_anywhere;
        est.degenerate = best_anywhere < best;  // the vanished tail decided it
    }
    return est;
}

QuantileEstimate estimate_quantile(const Forest& f, const Dataset& d,
                                   const QuantileQuery& query) {
    if (query.x.size() != d.p)
        throw std::invalid_argument("estimate_quantile: query size != p");
    const WeightVector w = forest_weights(f, query.x);
    return solve_quantile(w, d, query.tau, query.survival_kind, query.knn_k);
}

IntervalEstimate interval_from_weights(const WeightVector& w, const Dataset& d,
                                       double level, SurvivalKind kind) {
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("prediction_interval: level must lie in (0, 1)");
    const double tau_lo = (1.0 - level) / 2.0;
    const QuantileEstimate lo = solve_quantile(w, d, tau_lo, kind);
    const QuantileEstimate hi = solve_quantile(w, d, 1.0 - tau_lo, kind);

    IntervalEstimate interval;
    interval.lower = lo.q_hat;
    interval.upper = hi.q_hat;
    interval.degenerate = lo.degenerate || hi.degenerate;
    if (interval.lower > interval.upper) {
        std::swap(interval.lower, interval.upper);
        interval.swapped = true;
    }
    return interval;
}

IntervalEstimate prediction_interval(const Forest& f, const Dataset& d,
                                     std::span<const double> x, double level,
                                     SurvivalKind kind) {
    return interval_from_weights(forest_weights(f, x), d, level, kind);
}

}  // namespace cqrf
