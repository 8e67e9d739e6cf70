#include "cuisine/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cuisine/error.hpp"
#include "cuisine/numeric.hpp"
#include "cuisine/prng.hpp"

namespace cuisine {

const std::vector<double>& DecisionTree::leaf_distribution(
    const SparseVector& x) const {
  if (nodes.empty()) throw Error("decision tree: empty tree");
  int idx = 0;
  while (!nodes[idx].is_leaf()) {
    const TreeNode& node = nodes[idx];
    idx = x.at(node.feature) <= node.threshold ? node.left : node.right;
  }
  return nodes[idx].distribution;
}

int DecisionTree::predict(const SparseVector& x) const {
  return static_cast<int>(argmax(leaf_distribution(x)));
}

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  std::vector<int> depth_of(nodes.size(), 0);
  int deepest = 0;
  // Children always come after their parent, so one forward pass suffices.
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const TreeNode& node = nodes[i];
    if (node.is_leaf()) continue;
    depth_of[node.left] = depth_of[i] + 1;
    depth_of[node.right] = depth_of[i] + 1;
    deepest = std::max(deepest, depth_of[i] + 1);
  }
  return deepest;
}

namespace {

struct TreeBuildContext {
  std::span<const SparseVector> docs;
  std::span<const int> labels;
  int n_classes = 0;
  std::size_t n_features = 0;
  std::size_t feature_subsample = 0;  // 0 means all features
  int max_depth = 0;
};

std::vector<double> class_distribution(const TreeBuildContext& ctx,
                                       std::span<const std::size_t> members) {
  std::vector<double> dist(ctx.n_classes, 0.0);
  for (std::size_t i : members) dist[ctx.labels[i]] += 1.0;
  const double total = static_cast<double>(members.size());
  for (double& v : dist) v /= total;
  return dist;
}

double gini_from_counts(std::span<const std::int64_t> counts, std::int64_t total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (std::int64_t c : counts) {
    const double p = static_cast<double>(c) / static_cast<double>(total);
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

struct SplitChoice {
  bool found = false;
  std::uint32_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

/// Best Gini split for one feature over the node members, evaluated by a
/// sorted sweep with thresholds at midpoints of adjacent distinct values.
void best_split_for_feature(const TreeBuildContext& ctx,
                            std::span<const std::size_t> members,
                            std::uint32_t vocab_id, double parent_gini,
                            SplitChoice& best) {
  std::vector<std::pair<double, int>> values;
  values.reserve(members.size());
  for (std::size_t i : members) {
    values.emplace_back(ctx.docs[i].at(vocab_id), ctx.labels[i]);
  }
  std::sort(values.begin(), values.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  if (values.front().first == values.back().first) return;  // constant feature

  const std::int64_t n = static_cast<std::int64_t>(values.size());
  std::vector<std::int64_t> left(ctx.n_classes, 0), right(ctx.n_classes, 0);
  for (const auto& [v, y] : values) ++right[y];

  std::int64_t n_left = 0;
  for (std::int64_t i = 0; i + 1 < n; ++i) {
    const auto& [v, y] = values[i];
    ++left[y];
    --right[y];
    ++n_left;
    if (v == values[i + 1].first) continue;
    const double weighted =
        (static_cast<double>(n_left) * gini_from_counts(left, n_left) +
         static_cast<double>(n - n_left) * gini_from_counts(right, n - n_left)) /
        static_cast<double>(n);
    const double gain = parent_gini - weighted;
    if (gain > best.gain + 1e-12) {
      best.found = true;
      best.feature = vocab_id;
      best.threshold = 0.5 * (v + values[i + 1].first);
      best.gain = gain;
    }
  }
}

int build_node(const TreeBuildContext& ctx, DecisionTree& tree,
               std::vector<std::size_t> members, int depth, Prng& rng) {
  const int idx = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();

  std::vector<std::int64_t> counts(ctx.n_classes, 0);
  for (std::size_t i : members) ++counts[ctx.labels[i]];
  const double parent_gini =
      gini_from_counts(counts, static_cast<std::int64_t>(members.size()));

  const bool pure = parent_gini == 0.0;
  if (depth >= ctx.max_depth || pure || members.size() < 2) {
    tree.nodes[idx].distribution = class_distribution(ctx, members);
    return idx;
  }

  // Candidate features: either all of them or a partial Fisher-Yates draw.
  std::vector<std::uint32_t> candidates;
  const std::size_t m = ctx.n_features;
  const std::size_t take =
      ctx.feature_subsample == 0 ? m : std::min(ctx.feature_subsample, m);
  if (take == m) {
    candidates.resize(m);
    for (std::size_t f = 0; f < m; ++f) {
      candidates[f] = static_cast<std::uint32_t>(f) + Vocabulary::kFirstReal;
    }
  } else {
    std::vector<std::uint32_t> pool(m);
    for (std::size_t f = 0; f < m; ++f) {
      pool[f] = static_cast<std::uint32_t>(f) + Vocabulary::kFirstReal;
    }
    for (std::size_t j = 0; j < take; ++j) {
      const std::size_t pick = j + static_cast<std::size_t>(rng.below(m - j));
      std::swap(pool[j], pool[pick]);
    }
    pool.resize(take);
    candidates = std::move(pool);
  }

  SplitChoice best;
  for (std::uint32_t f : candidates) {
    best_split_for_feature(ctx, members, f, parent_gini, best);
  }
  if (!best.found) {
    tree.nodes[idx].distribution = class_distribution(ctx, members);
    return idx;
  }

  std::vector<std::size_t> left_members, right_members;
  for (std::size_t i : members) {
    if (ctx.docs[i].at(best.feature) <= best.threshold) {
      left_members.push_back(i);
    } else {
      right_members.push_back(i);
    }
  }
  members.clear();
  members.shrink_to_fit();

  tree.nodes[idx].feature = best.feature;
  tree.nodes[idx].threshold = best.threshold;
  const int left = build_node(ctx, tree, std::move(left_members), depth + 1, rng);
  tree.nodes[idx].left = left;
  const int right = build_node(ctx, tree, std::move(right_members), depth + 1, rng);
  tree.nodes[idx].right = right;
  return idx;
}

DecisionTree build_tree(const TreeBuildContext& ctx,
                        std::vector<std::size_t> members, Prng& rng) {
  DecisionTree tree;
  build_node(ctx, tree, std::move(members), 0, rng);
  return tree;
}

void validate_fit_inputs(std::span<const SparseVector> docs,
                         std::span<const int> labels, int n_classes,
                         std::size_t n_features) {
  if (docs.size() != labels.size()) {
    throw Error("tree ensemble: document and label counts differ");
  }
  if (docs.empty()) throw TrainingError("tree ensemble: empty training set");
  if (n_classes < 2) throw TrainingError("tree ensemble: need at least two classes");
  if (n_features == 0) throw TrainingError("tree ensemble: empty feature space");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) {
      throw TrainingError("tree ensemble: label out of range at document " +
                          std::to_string(i));
    }
  }
}

}  // namespace

TreeEnsemble rf_fit(std::span<const SparseVector> docs, std::span<const int> labels,
                    int n_classes, std::size_t n_features,
                    const RandomForestConfig& config) {
  validate_fit_inputs(docs, labels, n_classes, n_features);
  if (config.n_trees < 1) throw ConfigError("random forest: need at least one tree");
  if (config.max_depth < 0) throw ConfigError("random forest: negative max depth");

  TreeBuildContext ctx{docs, labels, n_classes, n_features, 0, config.max_depth};
  ctx.feature_subsample =
      config.feature_subsample != 0
          ? config.feature_subsample
          : static_cast<std::size_t>(
                std::ceil(std::sqrt(static_cast<double>(n_features))));

  TreeEnsemble model;
  model.kind = EnsembleKind::bagging;
  model.n_classes = n_classes;
  model.n_features = n_features;
  model.max_depth = config.max_depth;
  Prng master(config.seed);
  for (int t = 0; t < config.n_trees; ++t) {
    Prng rng = master.derive(static_cast<std::uint64_t>(t));
    std::vector<std::size_t> bootstrap(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
      bootstrap[i] = static_cast<std::size_t>(rng.below(docs.size()));
    }
    model.trees.push_back(build_tree(ctx, std::move(bootstrap), rng));
    model.tree_weights.push_back(1.0);
  }
  return model;
}

TreeEnsemble adaboost_fit(std::span<const SparseVector> docs,
                          std::span<const int> labels, int n_classes,
                          std::size_t n_features, const AdaBoostConfig& config) {
  validate_fit_inputs(docs, labels, n_classes, n_features);
  if (config.n_rounds < 1) throw ConfigError("adaboost: need at least one round");
  if (config.base_depth < 1) throw ConfigError("adaboost: base depth must be >= 1");
  if (config.retry_budget < 1) throw ConfigError("adaboost: empty retry budget");

  constexpr double kErrFloor = 1e-10;
  const std::size_t n = docs.size();
  const double chance_bound = 1.0 - 1.0 / static_cast<double>(n_classes);
  TreeBuildContext ctx{docs, labels, n_classes, n_features, 0, config.base_depth};

  TreeEnsemble model;
  model.kind = EnsembleKind::adaboost;
  model.n_classes = n_classes;
  model.n_features = n_features;
  model.max_depth = config.base_depth;

  std::vector<double> weights(n, 1.0 / static_cast<double>(n));
  std::vector<double> cumulative(n);
  Prng master(config.seed);

  for (int round = 0; round < config.n_rounds; ++round) {
    Prng round_rng = master.derive(static_cast<std::uint64_t>(round));
    bool accepted = false;
    for (int attempt = 0; attempt < config.retry_budget; ++attempt) {
      Prng rng = round_rng.derive(static_cast<std::uint64_t>(attempt));

      std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
      const double total = cumulative.back();
      std::vector<std::size_t> sample(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform() * total;
        sample[i] = static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), u) -
            cumulative.begin());
        if (sample[i] >= n) sample[i] = n - 1;
      }

      DecisionTree tree = build_tree(ctx, std::move(sample), rng);
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (tree.predict(docs[i]) != labels[i]) err += weights[i];
      }
      if (err >= chance_bound) continue;  // no better than chance, redraw

      const bool perfect = err == 0.0;
      err = std::max(err, kErrFloor);
      const double alpha =
          std::log((1.0 - err) / err) + std::log(static_cast<double>(n_classes - 1));

      std::vector<int> predictions(n);
      for (std::size_t i = 0; i < n; ++i) predictions[i] = tree.predict(docs[i]);
      model.trees.push_back(std::move(tree));
      model.tree_weights.push_back(alpha);
      accepted = true;

      if (perfect) return model;

      double new_total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (predictions[i] != labels[i]) weights[i] *= std::exp(alpha);
        new_total += weights[i];
      }
      for (double& w : weights) w /= new_total;
      break;
    }
    if (!accepted) {
      if (round == 0) {
        throw TrainingError(
            "adaboost: no weak learner beat chance within the retry budget");
      }
      break;  // keep the rounds built so far
    }
  }
  return model;
}

EnsemblePrediction ensemble_predict(const TreeEnsemble& model,
                                    const SparseVector& x) {
  if (model.trees.empty()) throw Error("tree ensemble: model not fitted");
  EnsemblePrediction out;
  out.distribution.assign(model.n_classes, 0.0);
  if (model.kind == EnsembleKind::bagging) {
    for (const DecisionTree& tree : model.trees) {
      const std::vector<double>& leaf = tree.leaf_distribution(x);
      for (int c = 0; c < model.n_classes; ++c) out.distribution[c] += leaf[c];
    }
    const double n = static_cast<double>(model.trees.size());
    for (double& v : out.distribution) v /= n;
  } else {
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
      out.distribution[model.trees[t].predict(x)] += model.tree_weights[t];
    }
    const double total = pairwise_sum(out.distribution);
    for (double& v : out.distribution) v /= total;  // alphas are positive
  }
  out.label = static_cast<int>(argmax(out.distribution));
  return out;
}

}  // namespace cuisine
