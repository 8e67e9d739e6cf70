#include "cuisine/pipeline.hpp"

#include <algorithm>
#include <memory>
#include <unordered_map>

#include "cuisine/error.hpp"
#include "cuisine/lstm.hpp"
#include "cuisine/naive_bayes.hpp"
#include "cuisine/numeric.hpp"
#include "cuisine/transformer.hpp"

namespace cuisine {

namespace {

std::vector<SparseVector> featurize_bow(const LabeledCorpus& corpus,
                                        const Vocabulary& vocab, bool tfidf) {
  std::vector<SparseVector> xs;
  xs.reserve(corpus.size());
  for (const RecipeRecord& r : corpus.records()) {
    xs.push_back(tfidf ? tfidf_vector(r, vocab) : count_vector(r, vocab));
  }
  return xs;
}

std::vector<TokenSequence> featurize_seq(const LabeledCorpus& corpus,
                                         const Vocabulary& vocab,
                                         std::size_t max_len) {
  std::vector<TokenSequence> xs;
  xs.reserve(corpus.size());
  for (const RecipeRecord& r : corpus.records()) {
    xs.push_back(encode_sequence(r, vocab, max_len));
  }
  return xs;
}

std::vector<int> label_ids(const LabeledCorpus& corpus) {
  std::vector<int> ys;
  ys.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) ys.push_back(corpus.label_of(i));
  return ys;
}

void require_every_class_present(const LabeledCorpus& train) {
  std::vector<bool> seen(train.labels().size(), false);
  for (std::size_t i = 0; i < train.size(); ++i) seen[train.label_of(i)] = true;
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) {
      throw TrainingError("cuisine '" + train.labels()[k] +
                          "' has no training documents");
    }
  }
}

}  // namespace

const std::vector<std::string>& model_kinds() {
  static const std::vector<std::string> kinds = {
      "nb", "logreg", "svm", "rf", "adaboost", "lstm", "transformer"};
  return kinds;
}

bool is_sequence_kind(const std::string& kind) {
  return kind == "lstm" || kind == "transformer";
}

LabeledCorpus subset(const LabeledCorpus& corpus,
                     std::span<const std::size_t> indices) {
  std::vector<RecipeRecord> records;
  records.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= corpus.size()) throw Error("subset: record index out of range");
    records.push_back(corpus.record(idx));
  }
  return LabeledCorpus::with_labels(std::move(records), corpus.labels());
}

FitResult fit_model(const std::string& kind, const LabeledCorpus& train,
                    const LabeledCorpus& validation, const Vocabulary& vocab,
                    const ModelHyperparams& hp, const std::string& vocab_path) {
  const auto& kinds = model_kinds();
  if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end()) {
    throw ConfigError("unknown model kind '" + kind + "'");
  }
  if (train.size() == 0) throw TrainingError("training partition is empty");
  const int k = train.num_classes();

  FitResult result;
  ModelBundle& bundle = result.bundle;
  bundle.model_type = kind;
  bundle.label_names = train.labels();
  bundle.vocab_path = vocab_path;
  bundle.vocab_hash = vocab.hash();

  const std::vector<int> ys = label_ids(train);

  if (kind == "nb") {
    require_every_class_present(train);
    const auto xs = featurize_bow(train, vocab, hp.nb_on_tfidf);
    NaiveBayes model;
    model.fit(xs, ys, k, vocab.real_size(), hp.nb_alpha, hp.nb_on_tfidf);
    bundle.nb = std::move(model);
    bundle.nb_on_tfidf = hp.nb_on_tfidf;
  } else if (kind == "logreg" || kind == "svm") {
    const auto xs = featurize_bow(train, vocab, true);
    const LinearKind scheme =
        kind == "svm" ? LinearKind::svm_ovr : hp.logreg_scheme;
    LinearModel model(scheme, k, vocab.real_size());
    model.fit(xs, ys, kind == "svm" ? hp.svm : hp.logreg);
    bundle.linear = std::move(model);
  } else if (kind == "rf") {
    const auto xs = featurize_bow(train, vocab, true);
    bundle.ensemble = rf_fit(xs, ys, k, vocab.real_size(), hp.rf);
  } else if (kind == "adaboost") {
    const auto xs = featurize_bow(train, vocab, true);
    bundle.ensemble = adaboost_fit(xs, ys, k, vocab.real_size(), hp.adaboost);
  } else {
    const TrainConfig& config = kind == "lstm" ? hp.lstm : hp.transformer;
    std::unique_ptr<SequenceClassifier> model;
    if (kind == "lstm") {
      model = std::make_unique<LstmModel>(vocab.size(), k, config);
    } else {
      model = std::make_unique<TransformerModel>(vocab.size(), k, config);
    }
    const auto train_x = featurize_seq(train, vocab, config.max_len);
    const auto val_x = featurize_seq(validation, vocab, config.max_len);
    const auto val_y = label_ids(validation);
    result.history = train_sequence_model(*model, train_x, ys, val_x, val_y);
    bundle.sequence = std::move(model);
  }
  return result;
}

Prediction predict_record(ModelBundle& bundle, const Vocabulary& vocab,
                          const RecipeRecord& record) {
  Prediction p;
  if (bundle.nb.has_value()) {
    const SparseVector x = bundle.nb_on_tfidf ? tfidf_vector(record, vocab)
                                              : count_vector(record, vocab);
    p.scores = bundle.nb->log_scores(x);
    p.probabilities = softmax(p.scores);
  } else if (bundle.linear.has_value()) {
    const SparseVector x = tfidf_vector(record, vocab);
    p.scores = bundle.linear->scores(x);
    p.probabilities = bundle.linear->probabilities(x);
  } else if (bundle.ensemble.has_value()) {
    const SparseVector x = tfidf_vector(record, vocab);
    EnsemblePrediction e = ensemble_predict(*bundle.ensemble, x);
    p.scores = std::move(e.distribution);
    p.probabilities = softmax(p.scores);
  } else if (bundle.sequence != nullptr) {
    const TokenSequence seq =
        encode_sequence(record, vocab, bundle.sequence->config().max_len);
    p.scores = bundle.sequence->forward(seq);
    p.probabilities = softmax(p.scores);
  } else {
    throw Error("model bundle has no engine");
  }
  p.label_id = argmax(p.scores);
  p.label = bundle.label_names.at(p.label_id);
  return p;
}

EvaluationOutput evaluate_model(ModelBundle& bundle, const Vocabulary& vocab,
                                const LabeledCorpus& corpus) {
  const int k = bundle.n_classes();
  if (k < 1) throw Error("model bundle has an empty label set");
  std::unordered_map<std::string, int> id_of;
  id_of.reserve(bundle.label_names.size());
  for (std::size_t i = 0; i < bundle.label_names.size(); ++i) {
    id_of.emplace(bundle.label_names[i], static_cast<int>(i));
  }

  EvaluationOutput out;
  out.cm = ConfusionMatrix(k);
  out.y_true.reserve(corpus.size());
  out.y_pred.reserve(corpus.size());
  out.losses.reserve(corpus.size());
  for (const RecipeRecord& r : corpus.records()) {
    auto it = id_of.find(r.cuisine);
    if (it == id_of.end()) {
      throw Error("cuisine '" + r.cuisine + "' is not in the model's label set");
    }
    const int y = it->second;
    Prediction p = predict_record(bundle, vocab, r);
    out.cm.add(y, p.label_id);
    out.y_true.push_back(y);
    out.y_pred.push_back(p.label_id);
    out.losses.push_back(cross_entropy(p.probabilities, y));
  }
  out.report = summarize(out.cm, out.losses);
  return out;
}

}  // namespace cuisine
