#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cuisine/ensemble.hpp"
#include "cuisine/features.hpp"
#include "cuisine/linear.hpp"
#include "cuisine/naive_bayes.hpp"
#include "cuisine/sequence.hpp"

namespace cuisine {

void save_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocabulary(const std::string& path);

/// One trained classifier of any supported type, bound to the vocabulary it
/// was fitted against. Exactly one of the engine slots is populated;
/// model_type is one of nb, logreg, svm, rf, adaboost, lstm, transformer.
struct ModelBundle {
  std::string model_type;
  std::vector<std::string> label_names;
  std::string vocab_path;
  std::uint64_t vocab_hash = 0;
  /// Resolved experiment config echoed into the file, as a JSON object
  /// string ("{}" when absent).
  std::string config_json = "{}";
  /// nb only: inputs were tf-idf vectors rather than raw counts, so
  /// inference must featurize the same way.
  bool nb_on_tfidf = false;

  std::optional<NaiveBayes> nb;
  std::optional<LinearModel> linear;
  std::optional<TreeEnsemble> ensemble;
  std::unique_ptr<SequenceClassifier> sequence;

  int n_classes() const;
};

/// JSON container {format_version, model_type, label_names, vocab_ref,
/// config, params}. Matrices are stored row-major; key order is sorted, so
/// identical models serialize to identical bytes.
void save_model(const ModelBundle& bundle, const std::string& path);
ModelBundle load_model(const std::string& path);

std::string hash_hex(std::uint64_t hash);

}  // namespace cuisine
