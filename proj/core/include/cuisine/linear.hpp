#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cuisine/features.hpp"
#include "cuisine/matrix.hpp"

namespace cuisine {

enum class LinearKind {
  logistic_ovr,      // K independent sigmoid classifiers
  logistic_softmax,  // single softmax over K classes
  svm_ovr,           // K one-vs-rest hinge classifiers
};

std::string to_string(LinearKind kind);
LinearKind parse_linear_kind(const std::string& name);

struct LinearTrainConfig {
  int epochs = 50;
  int batch_size = 32;
  double learning_rate = 0.1;
  /// Epoch e uses learning_rate / (1 + lr_decay * e).
  double lr_decay = 0.0;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  bool shuffle = true;
};

/// Linear classifier over sparse feature vectors, trained by mini-batch
/// gradient descent. Parameters live in a single K x (M+1) matrix whose
/// column 0 is the intercept; feature index t occupies column
/// t - Vocabulary::kFirstReal + 1. The intercept column is never
/// regularized.
class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(LinearKind kind, int n_classes, std::size_t n_features);

  void fit(std::span<const SparseVector> docs, std::span<const int> labels,
           const LinearTrainConfig& config);

  /// Raw margins beta_k0 + sum_t beta_kt x_t.
  std::vector<double> scores(const SparseVector& doc) const;
  int predict(const SparseVector& doc) const;
  /// logistic_ovr: per-class sigmoids normalized to sum 1 (loss reporting
  /// only; predictions come from the raw margins).
  /// logistic_softmax and svm_ovr: softmax of the margins.
  std::vector<double> probabilities(const SparseVector& doc) const;

  /// Full-batch regularized objective; fills the parameter gradient when
  /// grad is non-null. Used by the finite-difference checks.
  double objective(std::span<const SparseVector> docs, std::span<const int> labels,
                   double l2, DenseMatrix* grad = nullptr) const;

  LinearKind kind() const { return kind_; }
  int n_classes() const { return static_cast<int>(beta_.rows()); }
  std::size_t n_features() const { return beta_.cols() == 0 ? 0 : beta_.cols() - 1; }
  DenseMatrix& beta() { return beta_; }
  const DenseMatrix& beta() const { return beta_; }

  static LinearModel from_params(LinearKind kind, DenseMatrix beta);

 private:
  LinearKind kind_ = LinearKind::logistic_ovr;
  DenseMatrix beta_;  // K x (M+1), column 0 = intercept
};

}  // namespace cuisine
