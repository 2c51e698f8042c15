#include "amd/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amd/errors.hpp"
#include "amd/rng.hpp"

namespace amd {

double percentile_nearest_rank(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw DataError("percentile: empty sample");
    size_t n = sorted.size();
    size_t rank = static_cast<size_t>(std::ceil(q * static_cast<double>(n)));
    rank = std::clamp<size_t>(rank, 1, n);
    return sorted[rank - 1];
}

BootstrapResult bootstrap(
    size_t n_patients,
    const std::function<std::optional<double>(const std::vector<size_t>&)>& metric,
    int n_resamples, uint64_t seed) {
    if (n_patients == 0) throw DataError("bootstrap: empty patient list");
    if (n_resamples < 1) throw DataError("bootstrap: need at least one resample");

    std::vector<size_t> full(n_patients);
    std::iota(full.begin(), full.end(), size_t{0});
    auto point = metric(full);
    if (!point) throw DataError("bootstrap: metric undefined on the full set");

    BootstrapResult result;
    result.point = *point;

    constexpr int kMaxRedraws = 1000;
    std::vector<double> values(n_resamples);
    std::vector<size_t> resample(n_patients);
    for (int it = 0; it < n_resamples; ++it) {
        Rng rng(derive_seed(seed, 0xb007ULL + static_cast<uint64_t>(it)));
        std::optional<double> v;
        int attempts = 0;
        do {
            for (auto& idx : resample)
                idx = static_cast<size_t>(
                    rng.uniform_int(0, static_cast<int64_t>(n_patients) - 1));
            v = metric(resample);
            if (!v) {
                ++result.redraws;
                if (++attempts > kMaxRedraws)
                    throw DataError("bootstrap: metric undefined after " +
                                    std::to_string(kMaxRedraws) + " redraws");
            }
        } while (!v);
        values[it] = *v;
    }

    std::sort(values.begin(), values.end());
    result.lo = percentile_nearest_rank(values, 0.025);
    result.hi = percentile_nearest_rank(values, 0.975);
    return result;
}

}  // namespace amd
