#include "amd/tsne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "amd/errors.hpp"
#include "amd/rng.hpp"

namespace amd {

namespace {

std::vector<double> squared_distances(const std::vector<std::vector<double>>& x) {
    const size_t n = x.size();
    std::vector<double> d(n * n, 0.0);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (size_t k = 0; k < x[i].size(); ++k) {
                double diff = x[i][k] - x[j][k];
                s += diff * diff;
            }
            d[i * n + j] = s;
            d[j * n + i] = s;
        }
    return d;
}

// Solves one row's bandwidth so the conditional distribution hits the target
// entropy log(perplexity). Distances are shifted by the row minimum, which
// leaves the entropy unchanged but keeps the exponentials in range.
void conditional_row(const std::vector<double>& d2, size_t n, size_t i, double log_perp,
                     double* row_out) {
    double dmin = std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < n; ++j)
        if (j != i) dmin = std::min(dmin, d2[i * n + j]);

    double beta = 1.0;
    double beta_lo = -std::numeric_limits<double>::infinity();
    double beta_hi = std::numeric_limits<double>::infinity();
    std::vector<double> p(n, 0.0);

    for (int step = 0; step < 100; ++step) {
        double sum = 0.0, weighted = 0.0;
        for (size_t j = 0; j < n; ++j) {
            if (j == i) {
                p[j] = 0.0;
                continue;
            }
            double dt = d2[i * n + j] - dmin;
            p[j] = std::exp(-beta * dt);
            sum += p[j];
            weighted += dt * p[j];
        }
        double entropy = std::log(sum) + beta * weighted / sum;
        double diff = entropy - log_perp;
        if (std::abs(diff) <= 1e-4) break;
        if (diff > 0) {
            beta_lo = beta;
            beta = std::isinf(beta_hi) ? beta * 2.0 : (beta + beta_hi) / 2.0;
        } else {
            beta_hi = beta;
            beta = std::isinf(beta_lo) ? beta / 2.0 : (beta + beta_lo) / 2.0;
        }
    }

    double sum = 0.0;
    for (size_t j = 0; j < n; ++j) sum += p[j];
    for (size_t j = 0; j < n; ++j) row_out[j] = p[j] / sum;
}

double clamp_perplexity(double perplexity, size_t n) {
    double cap = (static_cast<double>(n) - 1.0) / 3.0;
    return std::max(2.0, std::min(perplexity, cap));
}

}  // namespace

std::vector<double> tsne_conditional_p(const std::vector<std::vector<double>>& vectors,
                                       double perplexity) {
    const size_t n = vectors.size();
    if (n < 2) throw DataError("tsne: need at least 2 points");
    const auto d2 = squared_distances(vectors);
    const double log_perp = std::log(clamp_perplexity(perplexity, n));
    std::vector<double> p(n * n, 0.0);
    for (size_t i = 0; i < n; ++i) conditional_row(d2, n, i, log_perp, &p[i * n]);
    return p;
}

TsneResult tsne(const std::vector<std::vector<double>>& vectors, const TsneConfig& cfg,
                const std::vector<uint64_t>* point_ids) {
    const size_t n = vectors.size();
    if (n < 4) throw DataError("tsne: need at least 4 points");
    const size_t dim = vectors[0].size();
    if (dim < 1) throw DataError("tsne: need at least 1 feature");
    for (const auto& v : vectors)
        if (v.size() != dim) throw DataError("tsne: ragged input");
    if (point_ids && point_ids->size() != n)
        throw DataError("tsne: point id count mismatch");
    if (cfg.iterations < 1) throw DataError("tsne: iterations must be >= 1");

    // Canonical processing order: ascending point id. All pairwise sums run in
    // this order so the result is independent of input row order.
    std::vector<uint64_t> ids(n);
    if (point_ids) ids = *point_ids;
    else std::iota(ids.begin(), ids.end(), uint64_t{0});
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return ids[a] < ids[b]; });

    std::vector<std::vector<double>> x(n);
    for (size_t i = 0; i < n; ++i) x[i] = vectors[order[i]];

    {
        const auto d2 = squared_distances(x);
        double dmax = 0.0;
        for (double v : d2) dmax = std::max(dmax, v);
        if (dmax == 0.0) throw DataError("tsne: degenerate input, all points identical");
    }

    // Symmetrized affinities, summing to 1.
    std::vector<double> p = tsne_conditional_p(x, cfg.perplexity);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j) {
            double v = (p[i * n + j] + p[j * n + i]) / (2.0 * static_cast<double>(n));
            p[i * n + j] = v;
            p[j * n + i] = v;
        }
    for (size_t i = 0; i < n; ++i) p[i * n + i] = 0.0;

    // Layout init keyed to (seed, id).
    std::vector<std::array<double, 2>> y(n), vel(n, {0.0, 0.0});
    for (size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(cfg.seed, mix64(ids[order[i]])));
        y[i] = {1e-4 * rng.normal(), 1e-4 * rng.normal()};
    }

    std::vector<double> num(n * n, 0.0);  // (1 + ||yi-yj||^2)^-1
    auto compute_num = [&]() {
        double z = 0.0;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) {
                if (i == j) {
                    num[i * n + j] = 0.0;
                    continue;
                }
                double dx = y[i][0] - y[j][0];
                double dy = y[i][1] - y[j][1];
                num[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
                z += num[i * n + j];
            }
        return z;
    };

    auto kl_divergence = [&](double z) {
        double kl = 0.0;
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                double pij = p[i * n + j];
                if (pij <= 0.0) continue;
                double qij = num[i * n + j] / z;
                kl += pij * std::log(pij / qij);
            }
        return kl;
    };

    TsneResult result;
    result.initial_kl = kl_divergence(compute_num());
    if (cfg.record_kl) result.kl_history.reserve(cfg.iterations);

    std::vector<std::array<double, 2>> grad(n);
    for (int it = 1; it <= cfg.iterations; ++it) {
        const double exag = it <= cfg.exaggeration_iters ? cfg.early_exaggeration : 1.0;
        const double momentum = it <= cfg.momentum_switch_iter ? 0.5 : 0.8;
        const double z = compute_num();

        for (size_t i = 0; i < n; ++i) {
            double gx = 0.0, gy = 0.0;
            for (size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                double nij = num[i * n + j];
                double coef = 4.0 * (exag * p[i * n + j] - nij / z) * nij;
                gx += coef * (y[i][0] - y[j][0]);
                gy += coef * (y[i][1] - y[j][1]);
            }
            grad[i] = {gx, gy};
        }

        double mean_x = 0.0, mean_y = 0.0;
        for (size_t i = 0; i < n; ++i) {
            vel[i][0] = momentum * vel[i][0] - cfg.learning_rate * grad[i][0];
            vel[i][1] = momentum * vel[i][1] - cfg.learning_rate * grad[i][1];
            y[i][0] += vel[i][0];
            y[i][1] += vel[i][1];
            mean_x += y[i][0];
            mean_y += y[i][1];
        }
        mean_x /= static_cast<double>(n);
        mean_y /= static_cast<double>(n);
        for (size_t i = 0; i < n; ++i) {
            y[i][0] -= mean_x;
            y[i][1] -= mean_y;
        }

        if (cfg.record_kl || it == cfg.iterations)
            result.final_kl = kl_divergence(compute_num());
        if (cfg.record_kl) result.kl_history.push_back(result.final_kl);
    }

    result.points.resize(n);
    for (size_t i = 0; i < n; ++i) result.points[order[i]] = y[i];
    return result;
}

}  // namespace amd
