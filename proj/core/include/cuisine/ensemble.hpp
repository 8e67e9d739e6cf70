#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cuisine/features.hpp"

namespace cuisine {

/// Either an internal split (children >= 0, distribution empty) or a leaf
/// (children == -1, distribution sums to 1). feature is a vocabulary id;
/// examples with value <= threshold go left.
struct TreeNode {
  std::uint32_t feature = 0;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> distribution;

  bool is_leaf() const { return left < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // node 0 is the root

  const std::vector<double>& leaf_distribution(const SparseVector& x) const;
  int predict(const SparseVector& x) const;
  int depth() const;
};

enum class EnsembleKind { bagging, adaboost };

struct TreeEnsemble {
  EnsembleKind kind = EnsembleKind::bagging;
  std::vector<DecisionTree> trees;
  std::vector<double> tree_weights;
  int n_classes = 0;
  std::size_t n_features = 0;
  int max_depth = 0;
};

struct RandomForestConfig {
  int n_trees = 100;
  int max_depth = 10;
  /// Features considered per split; 0 means ceil(sqrt(n_features)).
  std::size_t feature_subsample = 0;
  std::uint64_t seed = 0;
};

struct AdaBoostConfig {
  int n_rounds = 50;
  int base_depth = 1;
  std::uint64_t seed = 0;
  /// Resample attempts per round when a learner is no better than chance.
  int retry_budget = 8;
};

/// Bagged trees: each fit on a bootstrap sample, splits chosen by Gini
/// impurity over a random feature subset. Tree t draws from the stream
/// derived from seed with id t, so results are order-independent.
TreeEnsemble rf_fit(std::span<const SparseVector> docs, std::span<const int> labels,
                    int n_classes, std::size_t n_features,
                    const RandomForestConfig& config);

/// Multiclass boosting: depth-limited trees fit on weighted bootstrap
/// resamples, round weight ln((1-err)/err) + ln(K-1) with err floored at
/// 1e-10. A round whose learner has weighted error >= 1 - 1/K is redrawn
/// from the stream derived with ids (round, attempt); if the first round
/// exhausts its retry budget training aborts, later rounds stop early with
/// the ensemble built so far. A perfect round ends boosting.
TreeEnsemble adaboost_fit(std::span<const SparseVector> docs,
                          std::span<const int> labels, int n_classes,
                          std::size_t n_features, const AdaBoostConfig& config);

struct EnsemblePrediction {
  int label = 0;
  /// bagging: mean of leaf distributions; adaboost: normalized weighted
  /// vote. Sums to 1.
  std::vector<double> distribution;
};

/// Ties break toward the lowest class id.
EnsemblePrediction ensemble_predict(const TreeEnsemble& model, const SparseVector& x);

}  // namespace cuisine
