#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cuisine/corpus.hpp"
#include "cuisine/ensemble.hpp"
#include "cuisine/features.hpp"
#include "cuisine/linear.hpp"
#include "cuisine/metrics.hpp"
#include "cuisine/model_io.hpp"
#include "cuisine/sequence.hpp"

namespace cuisine {

/// Every model family's knobs in one place so a resolved experiment config
/// maps onto a single struct.
struct ModelHyperparams {
  ModelHyperparams() { transformer.learning_rate = 0.01; }

  double nb_alpha = 1.0;
  /// Fit the multinomial model on tf-idf weights instead of raw counts.
  bool nb_on_tfidf = false;
  LinearKind logreg_scheme = LinearKind::logistic_ovr;
  LinearTrainConfig logreg;
  LinearTrainConfig svm;
  RandomForestConfig rf;
  AdaBoostConfig adaboost;
  TrainConfig lstm;
  TrainConfig transformer;
};

const std::vector<std::string>& model_kinds();
bool is_sequence_kind(const std::string& kind);

/// New corpus holding the chosen records (in the given order) with the
/// label space of the source kept intact.
LabeledCorpus subset(const LabeledCorpus& corpus,
                     std::span<const std::size_t> indices);

struct FitResult {
  ModelBundle bundle;
  /// Present for sequence models only.
  std::optional<TrainHistory> history;
};

/// Trains one model of the named kind on the training corpus. The
/// validation corpus drives early stopping for sequence models and is
/// ignored by the rest. Label ids come from the training corpus label
/// space; a cuisine with no training records is an error naming it.
FitResult fit_model(const std::string& kind, const LabeledCorpus& train,
                    const LabeledCorpus& validation, const Vocabulary& vocab,
                    const ModelHyperparams& hp, const std::string& vocab_path);

struct Prediction {
  int label_id = 0;
  std::string label;
  /// Raw decision scores: log posteriors (nb), margins (linear), vote
  /// distribution (forests), logits (sequence models).
  std::vector<double> scores;
  /// Normalized per-class distribution used for loss reporting.
  std::vector<double> probabilities;
};

/// Featurizes one record to match the bundle's model family and scores it.
/// Sequence models mutate internal activation caches, hence non-const.
Prediction predict_record(ModelBundle& bundle, const Vocabulary& vocab,
                          const RecipeRecord& record);

struct EvaluationOutput {
  ConfusionMatrix cm{1};
  MetricsReport report;
  std::vector<int> y_true;
  std::vector<int> y_pred;
  std::vector<double> losses;
};

/// Scores every record of the corpus. Records are mapped into the bundle's
/// label space; an unknown cuisine is an error naming it.
EvaluationOutput evaluate_model(ModelBundle& bundle, const Vocabulary& vocab,
                                const LabeledCorpus& corpus);

}  // namespace cuisine
