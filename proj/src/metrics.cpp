#include "amd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "amd/errors.hpp"

namespace amd {

int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), int64_t{0});
}

std::string ConfusionMatrix::to_csv() const {
    std::string out = "gold\\pred";
    for (int p = 0; p < k; ++p) out += "," + std::to_string(p);
    out += '\n';
    for (int g = 0; g < k; ++g) {
        out += std::to_string(g);
        for (int p = 0; p < k; ++p) out += "," + std::to_string(at(g, p));
        out += '\n';
    }
    return out;
}

ConfusionMatrix confusion(const std::vector<int>& gold, const std::vector<int>& pred, int k) {
    if (gold.size() != pred.size())
        throw DataError("confusion: gold/pred length mismatch (" + std::to_string(gold.size()) +
                        " vs " + std::to_string(pred.size()) + ")");
    ConfusionMatrix cm(k);
    for (size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] < 0 || gold[i] >= k || pred[i] < 0 || pred[i] >= k)
            throw DataError("confusion: label out of range at index " + std::to_string(i));
        ++cm.at(gold[i], pred[i]);
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    int64_t total = cm.total();
    if (total == 0) throw DataError("metrics: empty confusion matrix");
    int64_t trace = 0;
    for (int c = 0; c < cm.k; ++c) trace += cm.at(c, c);
    return static_cast<double>(trace) / static_cast<double>(total);
}

namespace {

int64_t row_sum(const ConfusionMatrix& cm, int g) {
    int64_t s = 0;
    for (int p = 0; p < cm.k; ++p) s += cm.at(g, p);
    return s;
}

int64_t col_sum(const ConfusionMatrix& cm, int p) {
    int64_t s = 0;
    for (int g = 0; g < cm.k; ++g) s += cm.at(g, p);
    return s;
}

}  // namespace

double macro_sensitivity(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw DataError("metrics: empty confusion matrix");
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < cm.k; ++c) {
        int64_t gold_c = row_sum(cm, c);
        if (gold_c == 0) continue;  // class absent from gold
        sum += static_cast<double>(cm.at(c, c)) / static_cast<double>(gold_c);
        ++present;
    }
    return present == 0 ? 0.0 : sum / present;
}

double macro_specificity(const ConfusionMatrix& cm) {
    int64_t total = cm.total();
    if (total == 0) throw DataError("metrics: empty confusion matrix");
    double sum = 0.0;
    int present = 0;
    for (int c = 0; c < cm.k; ++c) {
        int64_t gold_c = row_sum(cm, c);
        if (gold_c == 0) continue;
        int64_t negatives = total - gold_c;
        if (negatives == 0) continue;  // single-class gold: rate undefined
        int64_t false_pos = col_sum(cm, c) - cm.at(c, c);
        sum += static_cast<double>(negatives - false_pos) / static_cast<double>(negatives);
        ++present;
    }
    return present == 0 ? 0.0 : sum / present;
}

MetricReport summary_metrics(const ConfusionMatrix& cm) {
    MetricReport r;
    r.accuracy.value = accuracy(cm);
    r.sensitivity.value = macro_sensitivity(cm);
    r.specificity.value = macro_specificity(cm);
    r.kappa.value = cohen_kappa(cm);
    return r;
}

double cohen_kappa(const ConfusionMatrix& cm) {
    int64_t total = cm.total();
    if (total == 0) throw DataError("metrics: empty confusion matrix");
    double po = accuracy(cm);
    double pe = 0.0;
    for (int c = 0; c < cm.k; ++c)
        pe += static_cast<double>(row_sum(cm, c)) * static_cast<double>(col_sum(cm, c));
    pe /= static_cast<double>(total) * static_cast<double>(total);
    if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;
    return (po - pe) / (1.0 - pe);
}

double weighted_kappa_quadratic(const ConfusionMatrix& cm) {
    int64_t total = cm.total();
    if (total == 0) throw DataError("metrics: empty confusion matrix");
    const int k = cm.k;
    auto weight = [k](int a, int b) {
        double d = a - b;
        return k > 1 ? d * d / static_cast<double>((k - 1) * (k - 1)) : 0.0;
    };
    double observed = 0.0, expected = 0.0;
    for (int g = 0; g < k; ++g)
        for (int p = 0; p < k; ++p) {
            double w = weight(g, p);
            observed += w * static_cast<double>(cm.at(g, p)) / total;
            expected += w * static_cast<double>(row_sum(cm, g)) *
                        static_cast<double>(col_sum(cm, p)) / (static_cast<double>(total) * total);
        }
    if (expected == 0.0) return observed == 0.0 ? 1.0 : 0.0;
    return 1.0 - observed / expected;
}

std::string agreement_band(double kappa) {
    if (kappa < 0.0) return "none";
    if (kappa <= 0.20) return "slight";
    if (kappa <= 0.40) return "fair";
    if (kappa <= 0.60) return "moderate";
    if (kappa <= 0.80) return "substantial";
    return "almost_perfect";
}

std::string RocCurve::to_csv() const {
    std::string out = "fpr,tpr\n";
    for (const auto& [fpr, tpr] : points)
        out += std::to_string(fpr) + "," + std::to_string(tpr) + "\n";
    return out;
}

RocCurve roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw DataError("roc: score/label length mismatch");
    int64_t pos = 0, neg = 0;
    for (int y : labels) {
        if (y == 1) ++pos;
        else if (y == 0) ++neg;
        else throw DataError("roc: labels must be 0 or 1");
    }
    if (pos == 0 || neg == 0)
        throw DataError("roc: AUC undefined, both classes must be present");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.emplace_back(0.0, 0.0);
    int64_t tp = 0, fp = 0;
    // Sweep from the highest score. fp counts negatives scored strictly above
    // the current tie group, so losses2 accumulates twice the Mann-Whitney
    // "negative above positive" count, ties counting once.
    int64_t losses2 = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        int64_t tied_pos = 0, tied_neg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] == 1) ++tied_pos;
            else ++tied_neg;
            ++j;
        }
        losses2 += 2 * tied_pos * fp + tied_pos * tied_neg;
        tp += tied_pos;
        fp += tied_neg;
        curve.points.emplace_back(static_cast<double>(fp) / neg, static_cast<double>(tp) / pos);
        i = j;
    }
    const int64_t wins2 = 2 * pos * neg - losses2;
    curve.auc = static_cast<double>(wins2) / static_cast<double>(2 * pos * neg);
    return curve;
}

}  // namespace amd
