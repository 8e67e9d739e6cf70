#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cuisine/features.hpp"
#include "cuisine/matrix.hpp"

namespace cuisine {

/// Multinomial naive Bayes over token counts with additive smoothing.
///
/// Inputs are expected to be raw per-document counts; real-valued weights
/// (e.g. tf-idf) are accepted only when fit() is called with
/// allow_fractional = true, since fractional "counts" change the smoothed
/// estimates away from the count model.
class NaiveBayes {
 public:
  /// log_likelihood_ is K x n_features; column t corresponds to vocabulary id
  /// t + Vocabulary::kFirstReal. n_features is the real (non-reserved)
  /// vocabulary size and fixes the smoothing denominator even for tokens
  /// absent from every training document.
  void fit(std::span<const SparseVector> docs, std::span<const int> labels,
           int n_classes, std::size_t n_features, double alpha = 1.0,
           bool allow_fractional = false);

  /// Joint log score per class: log prior + sum_t count_t * log p(t | k).
  /// Indices below kFirstReal (pad, unknown) are ignored.
  std::vector<double> log_scores(const SparseVector& doc) const;
  int predict(const SparseVector& doc) const;
  /// Softmax of log_scores.
  std::vector<double> probabilities(const SparseVector& doc) const;

  int n_classes() const { return static_cast<int>(log_prior_.size()); }
  std::size_t vocab_size() const { return log_likelihood_.cols(); }
  double alpha() const { return alpha_; }

  std::span<const double> log_prior() const { return log_prior_; }
  const DenseMatrix& log_likelihood() const { return log_likelihood_; }

  /// Rebuild from stored parameters.
  static NaiveBayes from_params(std::vector<double> log_prior,
                                DenseMatrix log_likelihood, double alpha);

 private:
  std::vector<double> log_prior_;
  DenseMatrix log_likelihood_;  // K x V_real
  double alpha_ = 1.0;
};

}  // namespace cuisine
