#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cqrf {

// Right-censored regression data. `y` holds the observed response
// min(T, C) and `delta[i]` = 1 when the event was observed (T <= C),
// 0 when the row is censored. `latent_t` carries the true uncensored
// response in simulations and is empty otherwise.
//
// Datasets are immutable after construction and safe to share across threads.
struct Dataset {
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<double> features;  // row-major, n * p
    std::vector<double> y;
    std::vector<std::uint8_t> delta;
    std::vector<double> latent_t;  // empty, or length n

    bool has_latent() const { return !latent_t.empty(); }
    double x(std::size_t i, std::size_t j) const { return features[i * p + j]; }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * p, p};
    }
};

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

// Throws std::runtime_error citing the first violated invariant
// (non-finite entry, delta outside {0,1}, y above latent_t, ...).
void validate(const Dataset& d);

// CSV schema: header "x0,...,x{p-1},y,delta" with an optional trailing "t"
// column for the latent response. Floats are written with 17 significant
// digits, so save/load round-trips every double exactly.
Dataset load_csv(const std::string& path, bool has_latent);
Dataset load_csv(const std::string& path);  // detects the "t" column
std::string to_csv(const Dataset& d);
void save_csv(const Dataset& d, const std::string& path);

// Copies the given rows (in order) into a new Dataset.
Dataset subset(const Dataset& d, std::span<const std::uint32_t> rows);

// Seeded train/test partition. Train size is round(train_fraction * n) with
// halves rounded away from zero; both sides keep ascending row order.
std::pair<Dataset, Dataset> split(const Dataset& d, const SplitSpec& spec);

}  // namespace cqrf
