#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "octcnn/dataset.hpp"

namespace octcnn {

/// Counts with glaucoma as the positive class.
struct ConfusionMatrix {
    long tp = 0, fn = 0, fp = 0, tn = 0;
    long total() const { return tp + fn + fp + tn; }
};

/// Thresholding convention: score >= threshold predicts glaucoma.
ConfusionMatrix confusion(const std::vector<Label>& labels, const std::vector<float>& scores,
                          float threshold = 0.5f);

/// The seven figures of merit; a metric whose denominator is zero is
/// reported as unset rather than 0.
struct MetricReport {
    std::optional<double> sn, spc, ppv, npv, fs, acc, auc;
};

/// Canonical row order shared by every report and table.
inline constexpr const char* kMetricNames[7] = {"SN", "SPC", "PPV", "NPV", "FS", "ACC", "AUC"};
std::optional<double> metric_by_index(const MetricReport& r, int index);

MetricReport basic_metrics(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr = 0, tpr = 0;
    double threshold = 0; // score cut: predicted positive when score >= threshold
};

struct RocCurve {
    std::vector<RocPoint> points; // anchored at (0,0) and (1,1)
};

/// Threshold sweep over distinct scores (ties grouped) with trapezoidal
/// integration; equal to the rank statistic P(s+ > s-) + 0.5 P(tie).
/// Throws DataError when only one class is present.
std::pair<RocCurve, double> roc_auc(const std::vector<Label>& labels,
                                    const std::vector<float>& scores);

struct MetricAggregate {
    std::optional<double> mean;
    std::optional<double> stddev; // sample (n-1); unset when fewer than 2 values
    int count = 0;                // defined entries that went in
};

struct AggregateReport {
    MetricAggregate by_metric[7]; // kMetricNames order
};

/// Per-metric mean and sample standard deviation over fold reports;
/// undefined entries are excluded per metric (count notes how many were
/// used). Requires at least two reports.
AggregateReport aggregate_folds(const std::vector<MetricReport>& reports);

} // namespace octcnn
