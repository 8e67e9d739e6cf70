#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cuisine {

/// K x K counts, rows = true class, cols = predicted class.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(int k) : k_(k), counts_(static_cast<std::size_t>(k) * k, 0) {}

  int k() const { return k_; }
  std::int64_t at(int true_class, int predicted) const {
    return counts_[static_cast<std::size_t>(true_class) * k_ + predicted];
  }
  void add(int true_class, int predicted, std::int64_t n = 1);

  std::int64_t total() const;
  std::int64_t trace() const;
  std::int64_t row_sum(int true_class) const;   // support
  std::int64_t col_sum(int predicted) const;    // predicted count

 private:
  int k_ = 0;
  std::vector<std::int64_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          int k);

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::int64_t support = 0;
  /// Zero-denominator flags: the metric was reported as 0 because no example
  /// was predicted as (precision) or belongs to (recall) this class.
  bool precision_undefined = false;
  bool recall_undefined = false;
};

struct MetricsReport {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  std::vector<ClassMetrics> per_class;
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
  std::int64_t total = 0;
};

/// Per-class precision/recall/F1 with macro and support-weighted aggregates.
/// Weighted recall is computed from the summed true-positive counts, which
/// makes it bit-identical to accuracy (they are the same quantity).
MetricsReport summarize(const ConfusionMatrix& cm, std::span<const double> losses);

/// Aligned text table with one column per model, rows in the order
/// Accuracy, Loss, Precision, Recall, F1 Score. Accuracy is rendered in
/// percent, the rest as plain fractions; macro and weighted variants are
/// both shown.
std::string render_metrics_table(const std::vector<std::string>& model_names,
                                 const std::vector<MetricsReport>& reports);

std::string metrics_report_to_json(const MetricsReport& report,
                                   const std::vector<std::string>& label_names);

}  // namespace cuisine
