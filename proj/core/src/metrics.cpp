#include "cuisine/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "cuisine/error.hpp"
#include "cuisine/numeric.hpp"

namespace cuisine {

void ConfusionMatrix::add(int true_class, int predicted, std::int64_t n) {
  if (true_class < 0 || true_class >= k_ || predicted < 0 || predicted >= k_) {
    throw Error("confusion matrix index out of range");
  }
  counts_[static_cast<std::size_t>(true_class) * k_ + predicted] += n;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t s = 0;
  for (auto c : counts_) s += c;
  return s;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t s = 0;
  for (int i = 0; i < k_; ++i) s += at(i, i);
  return s;
}

std::int64_t ConfusionMatrix::row_sum(int true_class) const {
  std::int64_t s = 0;
  for (int j = 0; j < k_; ++j) s += at(true_class, j);
  return s;
}

std::int64_t ConfusionMatrix::col_sum(int predicted) const {
  std::int64_t s = 0;
  for (int i = 0; i < k_; ++i) s += at(i, predicted);
  return s;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred,
                          int k) {
  if (y_true.size() != y_pred.size()) {
    throw Error("confusion: label vectors differ in length");
  }
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    cm.add(y_true[i], y_pred[i]);
  }
  return cm;
}

MetricsReport summarize(const ConfusionMatrix& cm, std::span<const double> losses) {
  const int k = cm.k();
  MetricsReport report;
  report.total = cm.total();
  report.per_class.resize(k);

  const double total = static_cast<double>(report.total);
  report.accuracy = report.total > 0
                        ? static_cast<double>(cm.trace()) / total
                        : 0.0;
  report.mean_loss = losses.empty() ? 0.0 : mean(losses);

  double sum_p = 0.0, sum_r = 0.0, sum_f = 0.0;
  double wsum_p = 0.0, wsum_f = 0.0;
  for (int c = 0; c < k; ++c) {
    ClassMetrics& m = report.per_class[c];
    const std::int64_t tp = cm.at(c, c);
    const std::int64_t support = cm.row_sum(c);
    const std::int64_t predicted = cm.col_sum(c);
    m.support = support;
    if (predicted > 0) {
      m.precision = static_cast<double>(tp) / static_cast<double>(predicted);
    } else {
      m.precision_undefined = true;
    }
    if (support > 0) {
      m.recall = static_cast<double>(tp) / static_cast<double>(support);
    } else {
      m.recall_undefined = true;
    }
    if (m.precision + m.recall > 0.0) {
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    }
    sum_p += m.precision;
    sum_r += m.recall;
    sum_f += m.f1;
    wsum_p += m.precision * static_cast<double>(support);
    wsum_f += m.f1 * static_cast<double>(support);
  }
  if (k > 0) {
    report.macro_precision = sum_p / k;
    report.macro_recall = sum_r / k;
    report.macro_f1 = sum_f / k;
  }
  if (report.total > 0) {
    report.weighted_precision = wsum_p / total;
    // sum_c support_c * (tp_c / support_c) == trace, so the support-weighted
    // recall collapses to trace/total and must equal accuracy exactly.
    report.weighted_recall = static_cast<double>(cm.trace()) / total;
    report.weighted_f1 = wsum_f / total;
  }
  return report;
}

namespace {

std::string format_value(double v, bool percent) {
  char buf[64];
  if (percent) {
    std::snprintf(buf, sizeof(buf), "%.2f", v * 100.0);
  } else {
    std::snprintf(buf, sizeof(buf), "%.4f", v);
  }
  return buf;
}

}  // namespace

std::string render_metrics_table(const std::vector<std::string>& model_names,
                                 const std::vector<MetricsReport>& reports) {
  if (model_names.size() != reports.size()) {
    throw Error("metrics table: one report required per model name");
  }
  const std::vector<std::string> row_names = {
      "Accuracy (%)", "Loss",          "Precision (macro)", "Recall (macro)",
      "F1 Score (macro)", "Precision (weighted)", "Recall (weighted)",
      "F1 Score (weighted)"};

  std::vector<std::vector<std::string>> cells(row_names.size());
  for (const MetricsReport& r : reports) {
    cells[0].push_back(format_value(r.accuracy, true));
    cells[1].push_back(format_value(r.mean_loss, false));
    cells[2].push_back(format_value(r.macro_precision, false));
    cells[3].push_back(format_value(r.macro_recall, false));
    cells[4].push_back(format_value(r.macro_f1, false));
    cells[5].push_back(format_value(r.weighted_precision, false));
    cells[6].push_back(format_value(r.weighted_recall, false));
    cells[7].push_back(format_value(r.weighted_f1, false));
  }

  std::size_t name_width = 0;
  for (const auto& n : row_names) name_width = std::max(name_width, n.size());
  std::vector<std::size_t> col_width(model_names.size());
  for (std::size_t j = 0; j < model_names.size(); ++j) {
    col_width[j] = model_names[j].size();
    for (const auto& row : cells) col_width[j] = std::max(col_width[j], row[j].size());
  }

  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(name_width)) << "Metric";
  for (std::size_t j = 0; j < model_names.size(); ++j) {
    out << "  " << std::right << std::setw(static_cast<int>(col_width[j]))
        << model_names[j];
  }
  out << '\n';
  for (std::size_t i = 0; i < row_names.size(); ++i) {
    out << std::left << std::setw(static_cast<int>(name_width)) << row_names[i];
    for (std::size_t j = 0; j < model_names.size(); ++j) {
      out << "  " << std::right << std::setw(static_cast<int>(col_width[j]))
          << cells[i][j];
    }
    out << '\n';
  }
  return out.str();
}

std::string metrics_report_to_json(const MetricsReport& report,
                                   const std::vector<std::string>& label_names) {
  nlohmann::ordered_json j;
  j["accuracy"] = report.accuracy;
  j["loss"] = report.mean_loss;
  j["total"] = report.total;
  j["macro"] = {{"precision", report.macro_precision},
                {"recall", report.macro_recall},
                {"f1", report.macro_f1}};
  j["weighted"] = {{"precision", report.weighted_precision},
                   {"recall", report.weighted_recall},
                   {"f1", report.weighted_f1}};
  nlohmann::ordered_json per_class = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < report.per_class.size(); ++c) {
    const ClassMetrics& m = report.per_class[c];
    std::string name = c < label_names.size() ? label_names[c] : std::to_string(c);
    per_class[name] = {{"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"support", m.support},
                       {"precision_undefined", m.precision_undefined},
                       {"recall_undefined", m.recall_undefined}};
  }
  j["per_class"] = per_class;
  return j.dump(2);
}

}  // namespace cuisine
