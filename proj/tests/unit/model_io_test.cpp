#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>
#include <vector>

#include "cuisine/error.hpp"
#include "cuisine/model_io.hpp"
#include "cuisine/pipeline.hpp"
#include "cuisine/preprocess.hpp"
#include "test_support.hpp"

using namespace cuisine;
using namespace cuisine::test;

namespace {

/// Small but non-trivial corpus: three classes with distinct vocabulary
/// plus shared filler tokens.
LabeledCorpus fixture_corpus() {
  std::vector<std::pair<std::string, std::vector<std::string>>> rows;
  const std::vector<std::string> markers = {"miso", "basil", "cumin"};
  const std::vector<std::string> cuisines = {"Japanese", "Italian", "Indian"};
  for (int i = 0; i < 30; ++i) {
    const int c = i % 3;
    std::vector<std::string> tokens = {"chop", markers[c], "stir",
                                       i % 2 == 0 ? "salt" : "oil", markers[c]};
    rows.push_back({cuisines[c], tokens});
  }
  return make_corpus(rows);
}

ModelHyperparams fast_hyperparams() {
  ModelHyperparams hp;
  hp.logreg.epochs = 15;
  hp.svm.epochs = 15;
  hp.rf.n_trees = 10;
  hp.rf.max_depth = 4;
  hp.adaboost.n_rounds = 6;
  for (TrainConfig* c : {&hp.lstm, &hp.transformer}) {
    c->epochs = 2;
    c->max_len = 8;
    c->embed_dim = 8;
    c->hidden_dim = 8;
    c->n_heads = 2;
    c->batch_size = 8;
  }
  return hp;
}

}  // namespace

TEST_CASE("vocabulary files round trip and re-save byte-identically") {
  TempDir dir;
  const LabeledCorpus corpus = fixture_corpus();
  const Vocabulary vocab = Vocabulary::build(corpus.records(), 1);
  const std::string path = dir.file("vocab.json");
  save_vocabulary(vocab, path);
  const Vocabulary loaded = load_vocabulary(path);
  CHECK(loaded.size() == vocab.size());
  CHECK(loaded.hash() == vocab.hash());
  CHECK(loaded == vocab);
  for (std::uint32_t id = Vocabulary::kFirstReal;
       id < static_cast<std::uint32_t>(vocab.size()); ++id) {
    CHECK(loaded.token(id) == vocab.token(id));
    CHECK(loaded.doc_freq(id) == vocab.doc_freq(id));
  }

  const std::string again = dir.file("vocab2.json");
  save_vocabulary(loaded, again);
  CHECK(read_file(path) == read_file(again));
}

TEST_CASE("every model kind survives a save and load round trip") {
  TempDir dir;
  const LabeledCorpus corpus = fixture_corpus();
  const Vocabulary vocab = Vocabulary::build(corpus.records(), 1);
  const std::string vocab_path = dir.file("vocab.json");
  save_vocabulary(vocab, vocab_path);
  const ModelHyperparams hp = fast_hyperparams();

  for (const std::string& kind : model_kinds()) {
    CAPTURE(kind);
    FitResult fit = fit_model(kind, corpus, corpus, vocab, hp, vocab_path);
    const std::string path = dir.file(kind + ".model.json");
    save_model(fit.bundle, path);

    ModelBundle loaded = load_model(path);
    CHECK(loaded.model_type == kind);
    CHECK(loaded.label_names == fit.bundle.label_names);
    CHECK(loaded.vocab_hash == vocab.hash());
    CHECK(loaded.n_classes() == 3);

    // Loaded parameters drive identical predictions.
    for (const RecipeRecord& record : corpus.records()) {
      const Prediction a = predict_record(fit.bundle, vocab, record);
      const Prediction b = predict_record(loaded, vocab, record);
      REQUIRE(a.label_id == b.label_id);
      REQUIRE(a.scores.size() == b.scores.size());
      for (std::size_t c = 0; c < a.scores.size(); ++c) {
        REQUIRE(a.scores[c] == b.scores[c]);
      }
    }

    // Serialization is canonical: save(load(x)) == x.
    const std::string again = dir.file(kind + ".model2.json");
    save_model(loaded, again);
    CHECK(read_file(path) == read_file(again));
  }
}

TEST_CASE("the naive bayes tf-idf flag survives the round trip") {
  TempDir dir;
  const LabeledCorpus corpus = fixture_corpus();
  const Vocabulary vocab = Vocabulary::build(corpus.records(), 1);
  const std::string vocab_path = dir.file("vocab.json");
  save_vocabulary(vocab, vocab_path);

  ModelHyperparams hp = fast_hyperparams();
  hp.nb_on_tfidf = true;
  FitResult fit = fit_model("nb", corpus, corpus, vocab, hp, vocab_path);
  CHECK(fit.bundle.nb_on_tfidf);

  const std::string path = dir.file("nb.model.json");
  save_model(fit.bundle, path);
  ModelBundle loaded = load_model(path);
  CHECK(loaded.nb_on_tfidf);

  // The flag changes featurization, so predictions only agree when it is
  // honored at inference time.
  for (const RecipeRecord& record : corpus.records()) {
    const Prediction a = predict_record(fit.bundle, vocab, record);
    const Prediction b = predict_record(loaded, vocab, record);
    REQUIRE(a.scores == b.scores);
  }
}

TEST_CASE("label names keep their training order through the file") {
  TempDir dir;
  const LabeledCorpus corpus = fixture_corpus();
  const Vocabulary vocab = Vocabulary::build(corpus.records(), 1);
  const std::string vocab_path = dir.file("vocab.json");
  save_vocabulary(vocab, vocab_path);
  FitResult fit =
      fit_model("nb", corpus, corpus, vocab, fast_hyperparams(), vocab_path);
  save_model(fit.bundle, dir.file("m.json"));
  const ModelBundle loaded = load_model(dir.file("m.json"));
  const std::vector<std::string> want = {"Japanese", "Italian", "Indian"};
  CHECK(loaded.label_names == want);
}

TEST_CASE("corrupt model files fail loudly") {
  TempDir dir;
  const std::string path = dir.file("bad.json");

  write_file(path, "{\"model_type\": \"nb\"");
  CHECK_THROWS_AS(load_model(path), FormatError);

  write_file(path,
             "{\"format_version\": 1, \"model_type\": \"quantum\","
             " \"label_names\": [\"A\"],"
             " \"vocab_ref\": {\"path\": \"v.json\","
             " \"hash\": \"0000000000000000\"},"
             " \"config\": {}, \"params\": {}}");
  CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("quantum"),
                       FormatError);

  CHECK_THROWS_AS(load_model(dir.file("missing.json")), IoError);
}

TEST_CASE("a sequence model file missing a tensor names it") {
  TempDir dir;
  const LabeledCorpus corpus = fixture_corpus();
  const Vocabulary vocab = Vocabulary::build(corpus.records(), 1);
  const std::string vocab_path = dir.file("vocab.json");
  save_vocabulary(vocab, vocab_path);
  FitResult fit =
      fit_model("lstm", corpus, corpus, vocab, fast_hyperparams(), vocab_path);
  const std::string path = dir.file("lstm.model.json");
  save_model(fit.bundle, path);

  std::string text = read_file(path);
  const std::string needle = "\"embedding\"";
  const std::size_t pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, needle.size(), "\"embeddinh\"");
  write_file(path, text);
  CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("embedding"),
                       FormatError);
}

TEST_CASE("hash_hex renders 16 lowercase hex digits") {
  CHECK(hash_hex(0) == "0000000000000000");
  CHECK(hash_hex(0xdeadbeefULL) == "00000000deadbeef");
  CHECK(hash_hex(0xffffffffffffffffULL) == "ffffffffffffffff");
}
