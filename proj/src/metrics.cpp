#include "cqrf/metrics.hpp"

#include <stdexcept>

namespace cqrf {

double quantile_loss(std::span<const double> q_hats, std::span<const double> t_true,
                     double tau) {
    if (q_hats.size() != t_true.size())
        throw std::invalid_argument("quantile_loss: length mismatch");
    if (q_hats.empty()) throw std::invalid_argument("quantile_loss: empty input");
    if (!(tau > 0.0 && tau < 1.0))
        throw std::invalid_argument("quantile_loss: tau must lie in (0, 1)");
    double total = 0.0;
    for (std::size_t i = 0; i < q_hats.size(); ++i) {
        const double u = t_true[i] - q_hats[i];
        total += u * (tau - (u < 0.0 ? 1.0 : 0.0));
    }
    return total / static_cast<double>(q_hats.size());
}

double c_index(std::span<const double> y, std::span<const std::uint8_t> delta,
               std::span<const double> risk) {
    if (y.size() != delta.size() || y.size() != risk.size())
        throw std::invalid_argument("c_index: length mismatch");
    double concordant = 0.0;
    std::size_t comparable = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (delta[i] != 1) continue;
        for (std::size_t j = 0; j < y.size(); ++j) {
            if (!(y[i] < y[j])) continue;
            ++comparable;
            if (risk[i] > risk[j])
                concordant += 1.0;
            else if (risk[i] == risk[j])
                concordant += 0.5;
        }
    }
    if (comparable == 0) throw std::invalid_argument("c_index: no comparable pairs");
    return concordant / static_cast<double>(comparable);
}

double interval_coverage(std::span<const std::pair<double, double>> intervals,
                         std::span<const double> t_true) {
    if (intervals.size() != t_true.size())
        throw std::invalid_argument("interval_coverage: length mismatch");
    if (intervals.empty()) throw std::invalid_argument("interval_coverage: empty input");
    std::size_t covered = 0;
    for (std::size_t i = 0; i < intervals.size(); ++i)
        if (intervals[i].first <= t_true[i] && t_true[i] <= intervals[i].second) ++covered;
    return static_cast<double>(covered) / static_cast<double>(intervals.size());
}

}  // namespace cqrf
