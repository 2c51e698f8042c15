#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace amd {

struct BootstrapResult {
    double point = 0.0;  // metric on the full set
    double lo = 0.0;     // empirical 2.5th percentile, nearest rank
    double hi = 0.0;     // empirical 97.5th percentile
    int redraws = 0;     // resamples redrawn because the metric was undefined
};

// Percentile bootstrap over patients. metric takes a with-replacement index
// resample of size n_patients; returning nullopt redraws that resample. Each
// iteration's RNG stream derives from (seed, iteration), so results do not
// depend on scheduling.
BootstrapResult bootstrap(
    size_t n_patients,
    const std::function<std::optional<double>(const std::vector<size_t>&)>& metric,
    int n_resamples = 2000, uint64_t seed = 0);

// Nearest-rank percentile of a sorted sample, q in (0, 1].
double percentile_nearest_rank(const std::vector<double>& sorted, double q);

}  // namespace amd
