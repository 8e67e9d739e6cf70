#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cuisine/features.hpp"
#include "cuisine/grad_check.hpp"

namespace cuisine {

/// Hyperparameters shared by both sequence architectures. Recorded verbatim
/// in every experiment report and model file.
struct TrainConfig {
  int epochs = 30;
  int batch_size = 32;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  int max_len = 64;
  int embed_dim = 64;     // d
  int hidden_dim = 128;   // h (recurrent models)
  int layers = 2;         // L
  int n_heads = 4;
  int patience = 3;
  double clip_norm = 5.0;

  void validate() const;
};

/// Trainable order-aware classifier with a hand-written backward pass.
/// forward() caches activations; backward() consumes that cache and
/// accumulates parameter gradients (call zero_grads() between batches).
class SequenceClassifier {
 public:
  virtual ~SequenceClassifier() = default;

  virtual std::string kind() const = 0;
  virtual int n_classes() const = 0;
  virtual const TrainConfig& config() const = 0;

  /// Logits for one sequence. Throws on true_length == 0.
  virtual std::vector<double> forward(const TokenSequence& seq) = 0;
  /// Accumulates d(loss)/d(params) given d(loss)/d(logits) for the most
  /// recent forward() call.
  virtual void backward(std::span<const double> dlogits) = 0;

  virtual void zero_grads() = 0;
  /// Stable, name-unique enumeration of every parameter tensor with its
  /// gradient buffer. Shared by the SGD step, the finite-difference checker
  /// and serialization.
  virtual std::vector<TensorRef> tensors() = 0;

  std::vector<double> probabilities(const TokenSequence& seq);
  int predict(const TokenSequence& seq);
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;
  bool stopped_early = false;
};

struct EvalStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

EvalStats evaluate_sequence_model(SequenceClassifier& model,
                                  std::span<const TokenSequence> xs,
                                  std::span<const int> ys);

/// Mini-batch SGD with per-epoch seeded shuffling, gradient clipping at
/// global norm config.clip_norm, and early stopping on validation loss:
/// after more than config.patience consecutive non-improving epochs,
/// training stops and the best-validation parameters are restored (they are
/// also restored at normal completion). A non-finite loss restores the best
/// parameters seen and throws TrainingError naming the epoch and batch.
TrainHistory train_sequence_model(SequenceClassifier& model,
                                  std::span<const TokenSequence> train_x,
                                  std::span<const int> train_y,
                                  std::span<const TokenSequence> val_x,
                                  std::span<const int> val_y);

}  // namespace cuisine
