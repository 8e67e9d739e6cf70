#include "cuisine/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cuisine/error.hpp"
#include "cuisine/numeric.hpp"
#include "cuisine/prng.hpp"

namespace cuisine {

void TrainConfig::validate() const {
  const bool ok = epochs > 0 && batch_size > 0 && learning_rate > 0.0 &&
                  max_len > 0 && embed_dim > 0 && hidden_dim > 0 && layers > 0 &&
                  n_heads > 0 && patience >= 0 && clip_norm > 0.0;
  if (!ok) throw ConfigError("sequence train config: all fields must be positive");
}

std::vector<double> SequenceClassifier::probabilities(const TokenSequence& seq) {
  return softmax(forward(seq));
}

int SequenceClassifier::predict(const TokenSequence& seq) {
  return static_cast<int>(argmax(forward(seq)));
}

EvalStats evaluate_sequence_model(SequenceClassifier& model,
                                  std::span<const TokenSequence> xs,
                                  std::span<const int> ys) {
  if (xs.size() != ys.size()) {
    throw Error("sequence eval: example and label counts differ");
  }
  if (xs.empty()) throw Error("sequence eval: empty set");
  std::vector<double> losses(xs.size());
  std::int64_t correct = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const std::vector<double> probs = softmax(model.forward(xs[i]));
    losses[i] = cross_entropy(probs, ys[i]);
    if (argmax(probs) == ys[i]) ++correct;
  }
  return {mean(losses),
          static_cast<double>(correct) / static_cast<double>(xs.size())};
}

namespace {

std::vector<DenseMatrix> snapshot(const std::vector<TensorRef>& tensors) {
  std::vector<DenseMatrix> out;
  out.reserve(tensors.size());
  for (const TensorRef& t : tensors) out.push_back(*t.value);
  return out;
}

void restore(const std::vector<TensorRef>& tensors,
             const std::vector<DenseMatrix>& saved) {
  for (std::size_t i = 0; i < tensors.size(); ++i) *tensors[i].value = saved[i];
}

}  // namespace

TrainHistory train_sequence_model(SequenceClassifier& model,
                                  std::span<const TokenSequence> train_x,
                                  std::span<const int> train_y,
                                  std::span<const TokenSequence> val_x,
                                  std::span<const int> val_y) {
  const TrainConfig& config = model.config();
  config.validate();
  if (train_x.size() != train_y.size() || val_x.size() != val_y.size()) {
    throw Error("sequence train: example and label counts differ");
  }
  if (train_x.empty()) throw TrainingError("sequence train: empty training set");
  if (val_x.empty()) throw TrainingError("sequence train: empty validation set");
  const int k = model.n_classes();
  for (int y : train_y) {
    if (y < 0 || y >= k) throw TrainingError("sequence train: label out of range");
  }
  for (int y : val_y) {
    if (y < 0 || y >= k) throw TrainingError("sequence train: label out of range");
  }

  std::vector<TensorRef> tensors = model.tensors();
  std::vector<DenseMatrix> best = snapshot(tensors);
  TrainHistory history;
  double best_val_loss = 0.0;
  int bad_streak = 0;

  Prng rng(config.seed);
  std::vector<std::size_t> order(train_x.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Prng epoch_rng = rng.derive(static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(order);

    std::vector<double> losses(train_x.size());
    std::int64_t correct = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(
          order.size(), start + static_cast<std::size_t>(config.batch_size));
      const double inv_batch = 1.0 / static_cast<double>(end - start);

      model.zero_grads();
      for (std::size_t pos = start; pos < end; ++pos) {
        const std::size_t i = order[pos];
        std::vector<double> probs = softmax(model.forward(train_x[i]));
        const double loss = cross_entropy(probs, train_y[i]);
        if (!std::isfinite(loss)) {
          restore(tensors, best);
          throw TrainingError("sequence train: non-finite loss at epoch " +
                              std::to_string(epoch) + ", batch " +
                              std::to_string(start / config.batch_size) +
                              "; best parameters restored");
        }
        losses[i] = loss;
        if (argmax(probs) == train_y[i]) ++correct;
        probs[train_y[i]] -= 1.0;
        for (double& g : probs) g *= inv_batch;
        model.backward(probs);
      }

      double grad_sq = 0.0;
      for (const TensorRef& t : tensors) grad_sq += t.grad->squared_norm();
      const double grad_norm = std::sqrt(grad_sq);
      const double clip_scale =
          grad_norm > config.clip_norm ? config.clip_norm / grad_norm : 1.0;
      for (const TensorRef& t : tensors) {
        t.value->add_scaled(*t.grad, -config.learning_rate * clip_scale);
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = mean(losses);
    stats.train_accuracy =
        static_cast<double>(correct) / static_cast<double>(train_x.size());
    const EvalStats val = evaluate_sequence_model(model, val_x, val_y);
    stats.val_loss = val.loss;
    stats.val_accuracy = val.accuracy;
    history.epochs.push_back(stats);
    if (!std::isfinite(val.loss)) {
      restore(tensors, best);
      throw TrainingError("sequence train: non-finite validation loss at epoch " +
                          std::to_string(epoch) + "; best parameters restored");
    }

    if (history.best_epoch < 0 || val.loss < best_val_loss) {
      best_val_loss = val.loss;
      history.best_epoch = epoch;
      best = snapshot(tensors);
      bad_streak = 0;
    } else {
      ++bad_streak;
      if (bad_streak > config.patience) {
        history.stopped_early = true;
        break;
      }
    }
  }

  restore(tensors, best);
  return history;
}

}  // namespace cuisine
