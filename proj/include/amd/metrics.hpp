#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace amd {

// Rows are gold labels, columns predicted.
struct ConfusionMatrix {
    int k = 0;
    std::vector<int64_t> counts;  // k * k

    explicit ConfusionMatrix(int k_) : k(k_), counts(static_cast<size_t>(k_) * k_, 0) {}

    int64_t& at(int gold, int pred) { return counts[static_cast<size_t>(gold) * k + pred]; }
    int64_t at(int gold, int pred) const {
        return counts[static_cast<size_t>(gold) * k + pred];
    }
    int64_t total() const;
    std::string to_csv() const;
};

ConfusionMatrix confusion(const std::vector<int>& gold, const std::vector<int>& pred, int k);

struct Ci {
    double lo = 0.0;
    double hi = 0.0;
};

struct Metric {
    double value = 0.0;
    std::optional<Ci> ci;
};

struct MetricReport {
    Metric accuracy;
    Metric sensitivity;  // macro-averaged recall over classes present in gold
    Metric specificity;  // macro-averaged one-vs-rest true-negative rate
    Metric kappa;
};

// Point estimates only; classes absent from gold are skipped in the macro means.
MetricReport summary_metrics(const ConfusionMatrix& cm);

double accuracy(const ConfusionMatrix& cm);
double macro_sensitivity(const ConfusionMatrix& cm);
double macro_specificity(const ConfusionMatrix& cm);

// Unweighted Cohen's kappa. Degenerate case p_e = 1 returns 1 when p_o = 1,
// else 0.
double cohen_kappa(const ConfusionMatrix& cm);

// Quadratically weighted variant, for sensitivity analysis.
double weighted_kappa_quadratic(const ConfusionMatrix& cm);

// Landis-Koch bands; edges are inclusive at the upper bound.
std::string agreement_band(double kappa);

struct RocCurve {
    std::vector<std::pair<double, double>> points;  // (FPR, TPR), (0,0) .. (1,1)
    double auc = 0.0;
    std::string to_csv() const;
};

// Threshold sweep over the distinct scores; the AUC is the tie-corrected
// Mann-Whitney statistic (identical to the trapezoid area under the sweep).
// Throws DataError unless both classes are present.
RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels);

}  // namespace amd
