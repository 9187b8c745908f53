#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace foaa {

/// Classification metrics for one test set. Positive class for sensitivity
/// and specificity is class 1 in the binary case; with more classes they are
/// macro-averaged one-vs-rest. AUC is absent when the test set holds a
/// single class.
struct MetricsReport {
  std::optional<double> auc;
  double specificity = 0.0;
  double sensitivity = 0.0;
  double f1_micro = 0.0;
  double f1_macro = 0.0;
  double accuracy = 0.0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]

  std::size_t total() const;
  // Recall of one class: confusion[c][c] / row sum (0 when the row is empty).
  double recall(std::size_t cls) const;
};

/// Binary AUC from the Mann-Whitney rank statistic with mid-ranks for ties.
/// `positive` marks the positive samples. Empty when either class is absent.
std::optional<double> auc_rank(std::span<const double> scores, const std::vector<bool>& positive);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

// Points of the empirical ROC curve, from (0,0) to (1,1), one per distinct
// score threshold.
std::vector<RocPoint> roc_curve(std::span<const double> scores, const std::vector<bool>& positive);

/// `probabilities[i]` holds the class distribution predicted for sample i.
/// Binary predictions threshold P(class 1) at 0.5; multiclass use argmax.
MetricsReport compute_metrics(const std::vector<std::vector<double>>& probabilities,
                              std::span<const std::size_t> labels, std::size_t num_classes);

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 for a single fold
  std::size_t count = 0;
};

MetricSummary summarize(std::span<const double> values);

}  // namespace foaa
