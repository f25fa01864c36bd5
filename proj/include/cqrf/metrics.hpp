#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cqrf {

struct MetricReport {
    std::string name;
    double value = 0.0;
    std::size_t n_evaluated = 0;
    std::optional<double> std_error;
};

// Mean check loss (1/n) sum rho_tau(t_i - q_hat_i) with
// rho_tau(u) = u * (tau - 1{u < 0}).
double quantile_loss(std::span<const double> q_hats, std::span<const double> t_true,
                     double tau);

// Harrell's concordance. Pairs (i, j) are comparable when delta_i = 1 and
// y_i < y_j; concordant when risk_i > risk_j, with risk ties worth 0.5.
// Throws when no pair is comparable.
double c_index(std::span<const double> y, std::span<const std::uint8_t> delta,
               std::span<const double> risk);

// Fraction of t_true falling inside the closed intervals.
double interval_coverage(std::span<const std::pair<double, double>> intervals,
                         std::span<const double> t_true);

}  // namespace cqrf
