#include "cuisine/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cuisine/error.hpp"
#include "cuisine/numeric.hpp"
#include "cuisine/prng.hpp"

namespace cuisine {

std::string to_string(LinearKind kind) {
  switch (kind) {
    case LinearKind::logistic_ovr: return "logistic_ovr";
    case LinearKind::logistic_softmax: return "logistic_softmax";
    case LinearKind::svm_ovr: return "svm_ovr";
  }
  throw Error("unknown linear kind");
}

LinearKind parse_linear_kind(const std::string& name) {
  if (name == "logistic_ovr") return LinearKind::logistic_ovr;
  if (name == "logistic_softmax") return LinearKind::logistic_softmax;
  if (name == "svm_ovr") return LinearKind::svm_ovr;
  throw ConfigError("unknown linear scheme: " + name);
}

LinearModel::LinearModel(LinearKind kind, int n_classes, std::size_t n_features)
    : kind_(kind), beta_(n_classes, n_features + 1) {
  if (n_classes < 2) throw ConfigError("linear model: need at least two classes");
  if (n_features == 0) throw ConfigError("linear model: empty feature space");
}

namespace {

constexpr std::size_t kInterceptCol = 0;

/// dL/ds for one example, loss averaged over n examples. Scores exactly at
/// the hinge point contribute zero (the subgradient choice there).
void score_gradient(LinearKind kind, std::span<const double> s, int label,
                    double inv_n, std::vector<double>& out) {
  const int k = static_cast<int>(s.size());
  switch (kind) {
    case LinearKind::logistic_ovr:
      for (int c = 0; c < k; ++c) {
        const double y = c == label ? 1.0 : 0.0;
        out[c] = (sigmoid(s[c]) - y) * inv_n;
      }
      break;
    case LinearKind::logistic_softmax: {
      std::vector<double> p(s.begin(), s.end());
      softmax_inplace(p);
      for (int c = 0; c < k; ++c) {
        const double y = c == label ? 1.0 : 0.0;
        out[c] = (p[c] - y) * inv_n;
      }
      break;
    }
    case LinearKind::svm_ovr:
      for (int c = 0; c < k; ++c) {
        const double t = c == label ? 1.0 : -1.0;
        out[c] = 1.0 - t * s[c] > 0.0 ? -t * inv_n : 0.0;
      }
      break;
  }
}

double example_loss(LinearKind kind, std::span<const double> s, int label) {
  const int k = static_cast<int>(s.size());
  double loss = 0.0;
  switch (kind) {
    case LinearKind::logistic_ovr:
      for (int c = 0; c < k; ++c) {
        const double p = sigmoid(s[c]);
        const double y = c == label ? 1.0 : 0.0;
        loss -= y * std::log(std::max(p, kCrossEntropyEps)) +
                (1.0 - y) * std::log(std::max(1.0 - p, kCrossEntropyEps));
      }
      break;
    case LinearKind::logistic_softmax: {
      std::vector<double> p(s.begin(), s.end());
      softmax_inplace(p);
      loss = cross_entropy(p, label);
      break;
    }
    case LinearKind::svm_ovr:
      for (int c = 0; c < k; ++c) {
        const double t = c == label ? 1.0 : -1.0;
        loss += std::max(0.0, 1.0 - t * s[c]);
      }
      break;
  }
  return loss;
}

}  // namespace

void LinearModel::fit(std::span<const SparseVector> docs, std::span<const int> labels,
                      const LinearTrainConfig& config) {
  if (docs.size() != labels.size()) {
    throw Error("linear model: document and label counts differ");
  }
  if (docs.empty()) throw TrainingError("linear model: empty training set");
  if (beta_.rows() == 0) throw Error("linear model: construct before fit");
  if (config.epochs < 1) throw ConfigError("linear model: epochs must be positive");
  if (config.batch_size < 1) {
    throw ConfigError("linear model: batch size must be positive");
  }
  if (config.learning_rate <= 0.0) {
    throw ConfigError("linear model: learning rate must be positive");
  }
  if (config.lr_decay < 0.0) {
    throw ConfigError("linear model: lr decay must be non-negative");
  }
  if (config.l2 < 0.0) throw ConfigError("linear model: l2 must be non-negative");
  const int k = n_classes();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k) {
      throw TrainingError("linear model: label out of range at document " +
                          std::to_string(i));
    }
  }

  Prng rng(config.seed);
  std::vector<std::size_t> order(docs.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> dls(k);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = config.learning_rate / (1.0 + config.lr_decay * epoch);
    if (config.shuffle) {
      Prng epoch_rng = rng.derive(static_cast<std::uint64_t>(epoch));
      epoch_rng.shuffle(order);
    }
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);

      // Decoupled step: shrink the non-intercept columns for the l2 term,
      // then subtract the averaged data gradient.
      if (config.l2 > 0.0) {
        const double shrink = 1.0 - lr * config.l2;
        for (std::size_t r = 0; r < beta_.rows(); ++r) {
          for (std::size_t c = 1; c < beta_.cols(); ++c) beta_(r, c) *= shrink;
        }
      }
      for (std::size_t pos = start; pos < end; ++pos) {
        const SparseVector& doc = docs[order[pos]];
        const int label = labels[order[pos]];
        const std::vector<double> s = scores(doc);
        score_gradient(kind_, s, label, inv_batch, dls);
        for (int c = 0; c < k; ++c) {
          const double step = lr * dls[c];
          if (step == 0.0) continue;
          beta_(c, kInterceptCol) -= step;
          for (const SparseEntry& e : doc.entries) {
            if (e.index < Vocabulary::kFirstReal) continue;
            const std::size_t col = e.index - Vocabulary::kFirstReal + 1;
            if (col >= beta_.cols()) continue;
            beta_(c, col) -= step * e.weight;
          }
        }
      }
    }
  }
  if (!beta_.all_finite()) {
    throw TrainingError("linear model: parameters diverged to non-finite values");
  }
}

std::vector<double> LinearModel::scores(const SparseVector& doc) const {
  const int k = n_classes();
  std::vector<double> s(k);
  for (int c = 0; c < k; ++c) s[c] = beta_(c, kInterceptCol);
  for (const SparseEntry& e : doc.entries) {
    if (e.index < Vocabulary::kFirstReal) continue;
    const std::size_t col = e.index - Vocabulary::kFirstReal + 1;
    if (col >= beta_.cols()) continue;
    for (int c = 0; c < k; ++c) s[c] += beta_(c, col) * e.weight;
  }
  return s;
}

int LinearModel::predict(const SparseVector& doc) const {
  return static_cast<int>(argmax(scores(doc)));
}

std::vector<double> LinearModel::probabilities(const SparseVector& doc) const {
  std::vector<double> s = scores(doc);
  if (kind_ == LinearKind::logistic_ovr) {
    double total = 0.0;
    for (double& v : s) {
      v = sigmoid(v);
      total += v;
    }
    for (double& v : s) v /= total;  // sigmoids are strictly positive
    return s;
  }
  softmax_inplace(s);
  return s;
}

double LinearModel::objective(std::span<const SparseVector> docs,
                              std::span<const int> labels, double l2,
                              DenseMatrix* grad) const {
  if (docs.size() != labels.size()) {
    throw Error("linear model: document and label counts differ");
  }
  if (docs.empty()) throw Error("linear model: empty objective batch");
  const int k = n_classes();
  const double inv_n = 1.0 / static_cast<double>(docs.size());
  if (grad != nullptr) *grad = DenseMatrix(beta_.rows(), beta_.cols());

  std::vector<double> losses(docs.size());
  std::vector<double> dls(k);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const std::vector<double> s = scores(docs[i]);
    losses[i] = example_loss(kind_, s, labels[i]);
    if (grad == nullptr) continue;
    score_gradient(kind_, s, labels[i], inv_n, dls);
    for (int c = 0; c < k; ++c) {
      if (dls[c] == 0.0) continue;
      (*grad)(c, kInterceptCol) += dls[c];
      for (const SparseEntry& e : docs[i].entries) {
        if (e.index < Vocabulary::kFirstReal) continue;
        const std::size_t col = e.index - Vocabulary::kFirstReal + 1;
        if (col >= beta_.cols()) continue;
        (*grad)(c, col) += dls[c] * e.weight;
      }
    }
  }
  double value = pairwise_sum(losses) * inv_n;
  if (l2 > 0.0) {
    double sq = 0.0;
    for (std::size_t r = 0; r < beta_.rows(); ++r) {
      for (std::size_t c = 1; c < beta_.cols(); ++c) {
        sq += beta_(r, c) * beta_(r, c);
        if (grad != nullptr) (*grad)(r, c) += l2 * beta_(r, c);
      }
    }
    value += 0.5 * l2 * sq;
  }
  return value;
}

LinearModel LinearModel::from_params(LinearKind kind, DenseMatrix beta) {
  if (beta.rows() < 2 || beta.cols() < 2) {
    throw FormatError("linear model: parameter matrix too small");
  }
  LinearModel model;
  model.kind_ = kind;
  model.beta_ = std::move(beta);
  return model;
}

}  // namespace cuisine
