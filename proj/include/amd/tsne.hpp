#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace amd {

struct TsneConfig {
    double perplexity = 30.0;  // clamped to [2, (n-1)/3]
    int iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    int exaggeration_iters = 250;
    int momentum_switch_iter = 250;  // momentum 0.5 before, 0.8 after
    uint64_t seed = 0;
    bool record_kl = false;  // track KL(P||Q) every iteration
};

struct TsneResult {
    std::vector<std::array<double, 2>> points;
    double initial_kl = 0.0;
    double final_kl = 0.0;
    std::vector<double> kl_history;  // filled when record_kl
};

// Exact O(n^2) t-SNE. Per-point Gaussian bandwidths are bisected to the target
// perplexity (1e-4 log-perplexity tolerance, at most 100 steps). Initial layout
// is keyed to (seed, point id) and all pair sums run in id order, so permuting
// the input rows permutes the output bit-exactly. Throws DataError when all
// points are identical.
TsneResult tsne(const std::vector<std::vector<double>>& vectors, const TsneConfig& cfg,
                const std::vector<uint64_t>* point_ids = nullptr);

// Conditional affinities before symmetrization; row-major n*n with zero
// diagonal, each row summing to 1. Exposed for verification.
std::vector<double> tsne_conditional_p(const std::vector<std::vector<double>>& vectors,
                                       double perplexity);

}  // namespace amd
