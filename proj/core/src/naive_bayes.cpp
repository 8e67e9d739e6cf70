#include "cuisine/naive_bayes.hpp"

#include <cmath>
#include <string>

#include "cuisine/error.hpp"
#include "cuisine/numeric.hpp"

namespace cuisine {

void NaiveBayes::fit(std::span<const SparseVector> docs, std::span<const int> labels,
                     int n_classes, std::size_t n_features, double alpha,
                     bool allow_fractional) {
  if (docs.size() != labels.size()) {
    throw Error("naive bayes: document and label counts differ");
  }
  if (docs.empty()) throw TrainingError("naive bayes: empty training set");
  if (n_classes < 1) throw TrainingError("naive bayes: need at least one class");
  if (n_features == 0) throw TrainingError("naive bayes: empty vocabulary");
  if (alpha <= 0.0) throw ConfigError("naive bayes: smoothing alpha must be positive");

  const std::size_t v_real = n_features;
  for (const SparseVector& doc : docs) {
    for (const SparseEntry& e : doc.entries) {
      if (e.index < Vocabulary::kFirstReal) continue;
      const std::size_t col = e.index - Vocabulary::kFirstReal;
      if (col >= v_real) {
        throw TrainingError("naive bayes: feature index exceeds vocabulary size");
      }
      if (!allow_fractional && e.weight != std::floor(e.weight)) {
        throw TrainingError(
            "naive bayes: fractional feature weights require allow_fractional");
      }
    }
  }

  std::vector<std::int64_t> class_counts(n_classes, 0);
  DenseMatrix token_counts(n_classes, v_real);
  std::vector<double> class_totals(n_classes, 0.0);

  for (std::size_t i = 0; i < docs.size(); ++i) {
    const int k = labels[i];
    if (k < 0 || k >= n_classes) {
      throw TrainingError("naive bayes: label out of range at document " +
                          std::to_string(i));
    }
    ++class_counts[k];
    for (const SparseEntry& e : docs[i].entries) {
      if (e.index < Vocabulary::kFirstReal) continue;
      const std::size_t col = e.index - Vocabulary::kFirstReal;
      token_counts(k, col) += e.weight;
      class_totals[k] += e.weight;
    }
  }
  for (int k = 0; k < n_classes; ++k) {
    if (class_counts[k] == 0) {
      throw TrainingError("naive bayes: class " + std::to_string(k) +
                          " has no training documents");
    }
  }

  alpha_ = alpha;
  log_prior_.assign(n_classes, 0.0);
  log_likelihood_ = DenseMatrix(n_classes, v_real);
  const double n = static_cast<double>(docs.size());
  const double v = static_cast<double>(v_real);
  for (int k = 0; k < n_classes; ++k) {
    log_prior_[k] = std::log(static_cast<double>(class_counts[k]) / n);
    const double denom = std::log(class_totals[k] + alpha * v);
    for (std::size_t t = 0; t < v_real; ++t) {
      log_likelihood_(k, t) = std::log(token_counts(k, t) + alpha) - denom;
    }
  }
}

std::vector<double> NaiveBayes::log_scores(const SparseVector& doc) const {
  const int k = n_classes();
  if (k == 0) throw Error("naive bayes: model not fitted");
  std::vector<double> scores(log_prior_.begin(), log_prior_.end());
  for (const SparseEntry& e : doc.entries) {
    if (e.index < Vocabulary::kFirstReal) continue;
    const std::size_t col = e.index - Vocabulary::kFirstReal;
    if (col >= log_likelihood_.cols()) continue;  // unseen at fit time
    for (int c = 0; c < k; ++c) {
      scores[c] += e.weight * log_likelihood_(c, col);
    }
  }
  return scores;
}

int NaiveBayes::predict(const SparseVector& doc) const {
  const std::vector<double> scores = log_scores(doc);
  return static_cast<int>(argmax(scores));
}

std::vector<double> NaiveBayes::probabilities(const SparseVector& doc) const {
  return softmax(log_scores(doc));
}

NaiveBayes NaiveBayes::from_params(std::vector<double> log_prior,
                                   DenseMatrix log_likelihood, double alpha) {
  if (log_prior.size() != log_likelihood.rows()) {
    throw FormatError("naive bayes: prior length does not match likelihood rows");
  }
  NaiveBayes model;
  model.log_prior_ = std::move(log_prior);
  model.log_likelihood_ = std::move(log_likelihood);
  model.alpha_ = alpha;
  return model;
}

}  // namespace cuisine
