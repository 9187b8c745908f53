#include "foaa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "foaa/errors.hpp"

namespace foaa {

std::size_t MetricsReport::total() const {
  std::size_t n = 0;
  for (const auto& row : confusion) n = std::accumulate(row.begin(), row.end(), n);
  return n;
}

double MetricsReport::recall(std::size_t cls) const {
  const auto& row = confusion.at(cls);
  const std::size_t n = std::accumulate(row.begin(), row.end(), std::size_t{0});
  return n == 0 ? 0.0 : static_cast<double>(row[cls]) / static_cast<double>(n);
}

std::optional<double> auc_rank(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw ContractError("auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Tied block [i, j) shares the mid-rank (i+1 + j) / 2.
    const double mid = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t)
      if (positive[order[t]]) {
        rank_sum += mid;
        ++n_pos;
      }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double p = static_cast<double>(n_pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(n_neg));
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) throw ContractError("roc: scores and labels differ in length");
  const std::size_t n = scores.size();
  const auto n_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  const double n_neg = static_cast<double>(n) - n_pos;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  std::vector<RocPoint> pts{{0.0, 0.0}};
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) {
      if (positive[order[j]]) tp += 1.0; else fp += 1.0;
      ++j;
    }
    pts.push_back({n_neg > 0 ? fp / n_neg : 0.0, n_pos > 0 ? tp / n_pos : 0.0});
    i = j;
  }
  return pts;
}

MetricsReport compute_metrics(const std::vector<std::vector<double>>& probabilities,
                              std::span<const std::size_t> labels, std::size_t num_classes) {
  if (probabilities.size() != labels.size()) throw ContractError("metrics: predictions and labels differ in length");
  if (num_classes < 2) throw ContractError("metrics: need at least two classes");
  const std::size_t n = labels.size();
  MetricsReport r;
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = probabilities[i];
    if (p.size() != num_classes) throw ContractError("metrics: probability row has wrong width");
    if (labels[i] >= num_classes) throw ContractError("metrics: label out of range");
    std::size_t pred = 0;
    if (num_classes == 2)
      pred = p[1] >= 0.5 ? 1 : 0;
    else
      pred = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    r.confusion[labels[i]][pred]++;
  }

  std::size_t correct = 0;
  for (std::size_t c = 0; c < num_classes; ++c) correct += r.confusion[c][c];
  r.accuracy = n ? static_cast<double>(correct) / static_cast<double>(n) : 0.0;
  // Single-label: every error is one FP and one FN, so micro-F1 is accuracy.
  r.f1_micro = r.accuracy;

  auto ratio = [](double num, double den) { return den > 0.0 ? num / den : 0.0; };
  double f1_sum = 0.0;
  std::size_t f1_count = 0;
  std::vector<double> sens(num_classes), spec(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    double tp = static_cast<double>(r.confusion[c][c]), fn = 0.0, fp = 0.0;
    for (std::size_t k = 0; k < num_classes; ++k) {
      if (k == c) continue;
      fn += static_cast<double>(r.confusion[c][k]);
      fp += static_cast<double>(r.confusion[k][c]);
    }
    const double tn = static_cast<double>(n) - tp - fn - fp;
    sens[c] = ratio(tp, tp + fn);
    spec[c] = ratio(tn, tn + fp);
    if (2.0 * tp + fp + fn > 0.0) {
      f1_sum += 2.0 * tp / (2.0 * tp + fp + fn);
      ++f1_count;
    }
  }
  r.f1_macro = f1_count ? f1_sum / static_cast<double>(f1_count) : 0.0;
  if (num_classes == 2) {
    r.sensitivity = sens[1];
    r.specificity = spec[1];
  } else {
    r.sensitivity = std::accumulate(sens.begin(), sens.end(), 0.0) / static_cast<double>(num_classes);
    r.specificity = std::accumulate(spec.begin(), spec.end(), 0.0) / static_cast<double>(num_classes);
  }

  // AUC: binary on P(class 1); multiclass macro one-vs-rest over classes that
  // have both positives and negatives.
  std::vector<double> scores(n);
  if (num_classes == 2) {
    for (std::size_t i = 0; i < n; ++i) scores[i] = probabilities[i][1];
    std::vector<bool> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = labels[i] == 1;
    r.auc = auc_rank(scores, pos);
  } else {
    double total = 0.0;
    std::size_t used = 0;
    std::vector<bool> pos(n);
    for (std::size_t c = 0; c < num_classes; ++c) {
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] = probabilities[i][c];
        pos[i] = labels[i] == c;
      }
      if (auto a = auc_rank(scores, pos)) {
        total += *a;
        ++used;
      }
    }
    if (used > 0) r.auc = total / static_cast<double>(used);
  }
  return r;
}

MetricSummary summarize(std::span<const double> values) {
  MetricSummary s;
  s.count = values.size();
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace foaa
