#include "octcnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "octcnn/error.hpp"

namespace octcnn {

ConfusionMatrix confusion(const std::vector<Label>& labels, const std::vector<float>& scores,
                          float threshold) {
    if (labels.size() != scores.size() || labels.empty())
        throw ConfigError("confusion: labels and scores must have equal nonzero length (" +
                          std::to_string(labels.size()) + " vs " +
                          std::to_string(scores.size()) + ")");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const bool actual_pos = labels[i] == Label::glaucoma;
        const bool predicted_pos = scores[i] >= threshold;
        if (actual_pos)
            (predicted_pos ? cm.tp : cm.fn)++;
        else
            (predicted_pos ? cm.fp : cm.tn)++;
    }
    return cm;
}

namespace {

std::optional<double> ratio(long num, long den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

} // namespace

MetricReport basic_metrics(const ConfusionMatrix& cm) {
    MetricReport r;
    r.sn = ratio(cm.tp, cm.tp + cm.fn);
    r.spc = ratio(cm.tn, cm.tn + cm.fp);
    r.ppv = ratio(cm.tp, cm.tp + cm.fp);
    r.npv = ratio(cm.tn, cm.tn + cm.fn);
    r.fs = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn);
    r.acc = ratio(cm.tp + cm.tn, cm.total());
    return r;
}

std::optional<double> metric_by_index(const MetricReport& r, int index) {
    switch (index) {
    case 0: return r.sn;
    case 1: return r.spc;
    case 2: return r.ppv;
    case 3: return r.npv;
    case 4: return r.fs;
    case 5: return r.acc;
    case 6: return r.auc;
    default: throw ConfigError("metric index out of range");
    }
}

std::pair<RocCurve, double> roc_auc(const std::vector<Label>& labels,
                                    const std::vector<float>& scores) {
    if (labels.size() != scores.size() || labels.empty())
        throw ConfigError("roc_auc: labels and scores must have equal nonzero length");
    long pos = 0, neg = 0;
    for (Label l : labels) (l == Label::glaucoma ? pos : neg)++;
    if (pos == 0 || neg == 0)
        throw DataError("roc_auc: AUC is undefined for a single-class sample set");

    // Sweep thresholds downward across distinct scores, ties grouped.
    std::vector<std::size_t> idx(labels.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    double auc = 0.0;
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        const float cut = scores[idx[i]];
        long d_tp = 0, d_fp = 0;
        while (i < idx.size() && scores[idx[i]] == cut) {
            (labels[idx[i]] == Label::glaucoma ? d_tp : d_fp)++;
            ++i;
        }
        const double fpr0 = static_cast<double>(fp) / static_cast<double>(neg);
        const double tpr0 = static_cast<double>(tp) / static_cast<double>(pos);
        tp += d_tp;
        fp += d_fp;
        const double fpr1 = static_cast<double>(fp) / static_cast<double>(neg);
        const double tpr1 = static_cast<double>(tp) / static_cast<double>(pos);
        auc += (fpr1 - fpr0) * (tpr0 + tpr1) / 2.0;
        curve.points.push_back({fpr1, tpr1, static_cast<double>(cut)});
    }
    if (curve.points.back().fpr != 1.0 || curve.points.back().tpr != 1.0)
        curve.points.push_back({1.0, 1.0, -std::numeric_limits<double>::infinity()});
    return {std::move(curve), auc};
}

AggregateReport aggregate_folds(const std::vector<MetricReport>& reports) {
    if (reports.size() < 2)
        throw ConfigError("aggregate_folds needs at least 2 reports, got " +
                          std::to_string(reports.size()));
    AggregateReport agg;
    for (int m = 0; m < 7; ++m) {
        std::vector<double> values;
        for (const auto& r : reports)
            if (auto v = metric_by_index(r, m)) values.push_back(*v);
        auto& a = agg.by_metric[m];
        a.count = static_cast<int>(values.size());
        if (values.empty()) continue;
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        a.mean = mean;
        if (values.size() >= 2) {
            double ss = 0.0;
            for (double v : values) ss += (v - mean) * (v - mean);
            a.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
        }
    }
    return agg;
}

} // namespace octcnn
