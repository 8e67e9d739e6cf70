#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cuisine/error.hpp"
#include "cuisine/features.hpp"
#include "cuisine/grad_check.hpp"
#include "cuisine/linear.hpp"
#include "cuisine/naive_bayes.hpp"
#include "cuisine/numeric.hpp"
#include "cuisine/prng.hpp"

using namespace cuisine;

namespace {

SparseVector sparse(std::initializer_list<std::pair<std::uint32_t, double>> entries) {
  SparseVector v;
  for (const auto& [offset, weight] : entries) {
    v.entries.push_back({Vocabulary::kFirstReal + offset, weight});
  }
  return v;
}

/// Random count documents over `vocab` features with every class present.
void random_count_docs(Prng& rng, std::size_t n_docs, std::size_t vocab,
                       int n_classes, std::vector<SparseVector>* docs,
                       std::vector<int>* labels) {
  docs->clear();
  labels->clear();
  for (std::size_t i = 0; i < n_docs; ++i) {
    SparseVector x;
    for (std::uint32_t f = 0; f < vocab; ++f) {
      const double count = static_cast<double>(rng.below(4));
      if (count > 0.0) x.entries.push_back({Vocabulary::kFirstReal + f, count});
    }
    if (x.entries.empty()) {
      x.entries.push_back({Vocabulary::kFirstReal, 1.0});
    }
    docs->push_back(std::move(x));
    labels->push_back(i < static_cast<std::size_t>(n_classes)
                          ? static_cast<int>(i)  // force every class nonempty
                          : static_cast<int>(rng.below(n_classes)));
  }
}

}  // namespace

TEST_CASE("naive bayes reproduces the hand-smoothed two-class fixture") {
  // c0 holds {a,a,b}, c1 holds {b}; alpha=1, vocabulary {a,b}.
  const std::vector<SparseVector> docs = {sparse({{0, 2.0}, {1, 1.0}}),
                                          sparse({{1, 1.0}})};
  const std::vector<int> labels = {0, 1};
  NaiveBayes model;
  model.fit(docs, labels, 2, 2, 1.0);

  CHECK(std::exp(model.log_likelihood()(0, 0)) ==
        doctest::Approx(0.6).epsilon(1e-12));  // (2+1)/(3+2)
  CHECK(std::exp(model.log_likelihood()(1, 1)) ==
        doctest::Approx(2.0 / 3.0).epsilon(1e-12));  // (1+1)/(1+2)
  CHECK(std::exp(model.log_prior()[0]) == doctest::Approx(0.5).epsilon(1e-12));

  // Query {a}: class 0 has the higher a-likelihood and equal prior.
  const std::vector<double> scores = model.log_scores(sparse({{0, 1.0}}));
  CHECK(argmax(scores) == 0);
}

TEST_CASE("naive bayes priors and per-class likelihoods normalize") {
  Prng rng(61);
  for (int trial = 0; trial < 25; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(4));
    const std::size_t vocab = 2 + rng.below(8);
    std::vector<SparseVector> docs;
    std::vector<int> labels;
    random_count_docs(rng, 6 + rng.below(20), vocab, k, &docs, &labels);
    NaiveBayes model;
    model.fit(docs, labels, k, vocab, 0.5 + rng.uniform());

    double prior_sum = 0.0;
    for (double lp : model.log_prior()) prior_sum += std::exp(lp);
    CHECK(std::abs(prior_sum - 1.0) < 1e-9);

    for (int c = 0; c < k; ++c) {
      double like_sum = 0.0;
      for (std::size_t t = 0; t < vocab; ++t) {
        like_sum += std::exp(model.log_likelihood()(c, t));
      }
      CHECK(std::abs(like_sum - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("naive bayes scores equal a direct posterior evaluation") {
  Prng rng(62);
  for (int trial = 0; trial < 40; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(2));
    const std::size_t vocab = 2 + rng.below(5);
    std::vector<SparseVector> docs;
    std::vector<int> labels;
    random_count_docs(rng, static_cast<std::size_t>(k) + rng.below(3), vocab, k,
                      &docs, &labels);
    const double alpha = 1.0;
    NaiveBayes model;
    model.fit(docs, labels, k, vocab, alpha);

    // Independent evaluation: smoothed counts straight from the documents.
    std::vector<double> class_count(k, 0.0);
    std::vector<std::vector<double>> token_count(k, std::vector<double>(vocab, 0.0));
    std::vector<double> class_total(k, 0.0);
    for (std::size_t i = 0; i < docs.size(); ++i) {
      class_count[labels[i]] += 1.0;
      for (const SparseEntry& e : docs[i].entries) {
        token_count[labels[i]][e.index - Vocabulary::kFirstReal] += e.weight;
        class_total[labels[i]] += e.weight;
      }
    }

    SparseVector query;
    for (std::uint32_t f = 0; f < vocab; ++f) {
      const double count = static_cast<double>(rng.below(3));
      if (count > 0.0) query.entries.push_back({Vocabulary::kFirstReal + f, count});
    }

    const std::vector<double> got = model.log_scores(query);
    for (int c = 0; c < k; ++c) {
      double want = std::log(class_count[c] / static_cast<double>(docs.size()));
      for (const SparseEntry& e : query.entries) {
        const std::size_t t = e.index - Vocabulary::kFirstReal;
        want += e.weight * std::log((token_count[c][t] + alpha) /
                                    (class_total[c] + alpha * vocab));
      }
      REQUIRE(std::abs(got[c] - want) < 1e-12);
    }
  }
}

TEST_CASE("naive bayes tie breaks to class zero and empty input uses priors") {
  // Symmetric corpus: both classes identical, so every score ties.
  const std::vector<SparseVector> docs = {sparse({{0, 1.0}}), sparse({{0, 1.0}})};
  const std::vector<int> labels = {0, 1};
  NaiveBayes model;
  model.fit(docs, labels, 2, 1, 1.0);
  CHECK(model.predict(sparse({{0, 3.0}})) == 0);

  // Unbalanced priors decide an empty query.
  const std::vector<SparseVector> docs2 = {sparse({{0, 1.0}}), sparse({{0, 1.0}}),
                                           sparse({{0, 1.0}})};
  const std::vector<int> labels2 = {1, 1, 0};
  NaiveBayes model2;
  model2.fit(docs2, labels2, 2, 1, 1.0);
  CHECK(model2.predict(SparseVector{}) == 1);
}

TEST_CASE("naive bayes with a huge alpha flattens the likelihoods") {
  const std::vector<SparseVector> docs = {sparse({{0, 5.0}}), sparse({{1, 5.0}})};
  const std::vector<int> labels = {0, 1};
  NaiveBayes model;
  model.fit(docs, labels, 2, 2, 1e9);
  for (int c = 0; c < 2; ++c) {
    CHECK(std::exp(model.log_likelihood()(c, 0)) ==
          doctest::Approx(0.5).epsilon(1e-6));
    CHECK(std::exp(model.log_likelihood()(c, 1)) ==
          doctest::Approx(0.5).epsilon(1e-6));
  }
}

TEST_CASE("naive bayes refuses a class with no documents") {
  const std::vector<SparseVector> docs = {sparse({{0, 1.0}})};
  const std::vector<int> labels = {0};
  NaiveBayes model;
  CHECK_THROWS_WITH_AS(model.fit(docs, labels, 3, 1, 1.0),
                       doctest::Contains("class 1"), TrainingError);
}

TEST_CASE("single-class naive bayes always predicts that class") {
  const std::vector<SparseVector> docs = {sparse({{0, 1.0}}), sparse({{1, 2.0}})};
  const std::vector<int> labels = {0, 0};
  NaiveBayes model;
  model.fit(docs, labels, 1, 2, 1.0);
  CHECK(model.predict(sparse({{1, 7.0}})) == 0);
  CHECK(model.predict(SparseVector{}) == 0);
}

TEST_CASE("logistic regression separates a linearly separable pair of classes") {
  // Class 0 lives on feature 0, class 1 on feature 1.
  Prng rng(63);
  std::vector<SparseVector> docs;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    const int c = i % 2;
    docs.push_back(sparse({{static_cast<std::uint32_t>(c), rng.uniform(0.5, 1.0)}}));
    labels.push_back(c);
  }
  LinearModel model(LinearKind::logistic_ovr, 2, 2);
  LinearTrainConfig config;
  config.epochs = 100;
  config.seed = 1;
  model.fit(docs, labels, config);

  int correct = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (model.predict(docs[i]) == labels[i]) ++correct;
  }
  CHECK(static_cast<double>(correct) / docs.size() >= 0.99);
}

TEST_CASE("constant inputs with balanced labels converge to class frequencies") {
  std::vector<SparseVector> docs;
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) {
    docs.push_back(sparse({{0, 1.0}}));
    labels.push_back(i % 3 == 0 ? 1 : 0);  // class 1 frequency 1/3
  }
  LinearModel model(LinearKind::logistic_ovr, 2, 1);
  LinearTrainConfig config;
  config.epochs = 600;
  config.learning_rate = 0.5;
  config.l2 = 0.0;
  config.seed = 2;
  model.fit(docs, labels, config);

  const std::vector<double> margins = model.scores(docs[0]);
  CHECK(sigmoid(margins[0]) == doctest::Approx(2.0 / 3.0).epsilon(0.05));
  CHECK(sigmoid(margins[1]) == doctest::Approx(1.0 / 3.0).epsilon(0.05));
}

TEST_CASE("logistic gradient agrees with finite differences") {
  Prng rng(64);
  for (LinearKind kind : {LinearKind::logistic_ovr, LinearKind::logistic_softmax}) {
    std::vector<SparseVector> docs;
    std::vector<int> labels;
    for (int i = 0; i < 5; ++i) {
      docs.push_back(sparse({{static_cast<std::uint32_t>(rng.below(4)),
                              rng.uniform(0.2, 1.0)}}));
      labels.push_back(static_cast<int>(rng.below(3)));
    }
    LinearModel model(kind, 3, 4);
    for (std::size_t i = 0; i < model.beta().size(); ++i) {
      model.beta().data()[i] = rng.normal(0.0, 0.5);
    }
    DenseMatrix grad(model.beta().rows(), model.beta().cols());
    std::vector<TensorRef> tensors = {{"beta", &model.beta(), &grad}};
    const double l2 = 0.01;
    GradCheckOptions opts;
    opts.eps = 1e-4;
    const GradCheckReport report = grad_check(
        tensors, [&] { return model.objective(docs, labels, l2, nullptr); },
        [&] { model.objective(docs, labels, l2, &grad); }, opts);
    CHECK(report.max_rel_error < 1e-6);
  }
}

TEST_CASE("hinge subgradient agrees with finite differences away from kinks") {
  Prng rng(65);
  std::vector<SparseVector> docs;
  std::vector<int> labels;
  LinearModel model(LinearKind::svm_ovr, 3, 4);
  // Margins land within 1e-3 of a hinge only on a measure-zero slice; redraw
  // the random model if it happens.
  for (int attempt = 0; attempt < 50; ++attempt) {
    docs.clear();
    labels.clear();
    for (int i = 0; i < 5; ++i) {
      docs.push_back(sparse({{static_cast<std::uint32_t>(rng.below(4)),
                              rng.uniform(0.2, 1.0)}}));
      labels.push_back(static_cast<int>(rng.below(3)));
    }
    for (std::size_t i = 0; i < model.beta().size(); ++i) {
      model.beta().data()[i] = rng.normal(0.0, 0.5);
    }
    bool clear_of_kinks = true;
    for (const SparseVector& doc : docs) {
      for (double margin : model.scores(doc)) {
        if (std::abs(1.0 - margin) < 1e-3 || std::abs(1.0 + margin) < 1e-3) {
          clear_of_kinks = false;
        }
      }
    }
    if (clear_of_kinks) break;
  }
  DenseMatrix grad(model.beta().rows(), model.beta().cols());
  std::vector<TensorRef> tensors = {{"beta", &model.beta(), &grad}};
  GradCheckOptions opts;
  opts.eps = 1e-4;
  const GradCheckReport report = grad_check(
      tensors, [&] { return model.objective(docs, labels, 0.01, nullptr); },
      [&] { model.objective(docs, labels, 0.01, &grad); }, opts);
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("svm separates the separable fixture with healthy margins") {
  Prng rng(66);
  std::vector<SparseVector> docs;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    const int c = i % 2;
    docs.push_back(sparse({{static_cast<std::uint32_t>(c), rng.uniform(0.5, 1.0)}}));
    labels.push_back(c);
  }
  LinearModel model(LinearKind::svm_ovr, 2, 2);
  LinearTrainConfig config;
  config.epochs = 200;
  config.learning_rate = 0.5;
  config.l2 = 1e-4;
  config.seed = 3;
  model.fit(docs, labels, config);

  int correct = 0;
  int margins_ok = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (model.predict(docs[i]) == labels[i]) ++correct;
    const std::vector<double> margins = model.scores(docs[i]);
    // One-vs-rest target: own class margin >= 1, other class margin <= -1.
    bool ok = true;
    for (int c = 0; c < 2; ++c) {
      const double y = c == labels[i] ? 1.0 : -1.0;
      if (y * margins[c] < 1.0) ok = false;
    }
    if (ok) ++margins_ok;
  }
  CHECK(static_cast<double>(correct) / docs.size() >= 0.99);
  CHECK(static_cast<double>(margins_ok) / docs.size() >= 0.95);
}

TEST_CASE("crushing regularization drives the weights toward zero") {
  Prng rng(67);
  std::vector<SparseVector> docs;
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) {
    const int c = i % 2;
    docs.push_back(sparse({{static_cast<std::uint32_t>(c), 1.0}}));
    labels.push_back(c);
  }
  LinearModel model(LinearKind::svm_ovr, 2, 2);
  LinearTrainConfig config;
  config.epochs = 100;
  config.l2 = 1e6;
  config.seed = 4;
  model.fit(docs, labels, config);
  for (std::size_t r = 0; r < model.beta().rows(); ++r) {
    for (std::size_t c = 1; c < model.beta().cols(); ++c) {
      CHECK(std::abs(model.beta()(r, c)) < 1e-2);
    }
  }
}

TEST_CASE("zero weights score one half per class and predict class zero") {
  LinearModel model = LinearModel::from_params(LinearKind::logistic_ovr,
                                               DenseMatrix(3, 5));
  const SparseVector x = sparse({{0, 1.0}, {2, 0.5}});
  for (double margin : model.scores(x)) CHECK(margin == 0.0);
  CHECK(model.predict(x) == 0);
  const std::vector<double> probs = model.probabilities(x);
  for (double p : probs) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("scaling all scores by a positive constant never moves the argmax") {
  Prng rng(68);
  for (int trial = 0; trial < 20; ++trial) {
    DenseMatrix beta(4, 6);
    for (std::size_t i = 0; i < beta.size(); ++i) beta.data()[i] = rng.normal();
    const LinearModel model = LinearModel::from_params(LinearKind::svm_ovr, beta);

    DenseMatrix scaled_beta = beta;
    const double c = rng.uniform(0.1, 10.0);
    for (std::size_t i = 0; i < scaled_beta.size(); ++i) scaled_beta.data()[i] *= c;
    const LinearModel scaled = LinearModel::from_params(LinearKind::svm_ovr,
                                                        std::move(scaled_beta));

    const SparseVector x = sparse({{0, rng.uniform(0.1, 1.0)},
                                   {3, rng.uniform(0.1, 1.0)}});
    CHECK(model.predict(x) == scaled.predict(x));
  }
}

TEST_CASE("scaling the input preserves the argmax when intercepts are zero") {
  Prng rng(69);
  for (int trial = 0; trial < 20; ++trial) {
    DenseMatrix beta(3, 5);
    for (std::size_t i = 0; i < beta.size(); ++i) beta.data()[i] = rng.normal();
    for (std::size_t r = 0; r < beta.rows(); ++r) beta(r, 0) = 0.0;
    const LinearModel model = LinearModel::from_params(LinearKind::svm_ovr, beta);

    SparseVector x = sparse({{1, rng.uniform(0.1, 1.0)}, {2, rng.uniform(0.1, 1.0)}});
    const int base = model.predict(x);
    const double c = rng.uniform(0.5, 20.0);
    for (SparseEntry& e : x.entries) e.weight *= c;
    CHECK(model.predict(x) == base);
  }
}

TEST_CASE("same seed and config produce bit-identical fits") {
  Prng rng(70);
  std::vector<SparseVector> docs;
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) {
    docs.push_back(sparse({{static_cast<std::uint32_t>(rng.below(6)),
                            rng.uniform(0.1, 1.0)}}));
    labels.push_back(i % 3);
  }
  for (LinearKind kind :
       {LinearKind::logistic_ovr, LinearKind::logistic_softmax, LinearKind::svm_ovr}) {
    LinearTrainConfig config;
    config.epochs = 20;
    config.seed = 17;
    LinearModel a(kind, 3, 6), b(kind, 3, 6);
    a.fit(docs, labels, config);
    b.fit(docs, labels, config);
    REQUIRE(a.beta().rows() == b.beta().rows());
    for (std::size_t i = 0; i < a.beta().size(); ++i) {
      REQUIRE(a.beta().data()[i] == b.beta().data()[i]);
    }
  }
}
