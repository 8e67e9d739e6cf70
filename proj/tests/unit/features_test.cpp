#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cuisine/error.hpp"
#include "cuisine/features.hpp"
#include "cuisine/model_io.hpp"
#include "cuisine/prng.hpp"
#include "test_support.hpp"

using namespace cuisine;
using namespace cuisine::test;

namespace {

/// Dense reference TF-IDF: raw-count tf, idf = ln((1+N)/(1+df)) + 1, then
/// L2 normalization. Written against a dense incidence matrix so it shares
/// no code with the sparse implementation under test.
std::vector<std::vector<double>> dense_tfidf(
    const std::vector<std::vector<std::string>>& docs,
    const std::vector<std::string>& vocab) {
  const std::size_t n = docs.size();
  std::vector<std::vector<double>> tf(n, std::vector<double>(vocab.size(), 0.0));
  std::vector<double> df(vocab.size(), 0.0);
  for (std::size_t v = 0; v < vocab.size(); ++v) {
    for (std::size_t d = 0; d < n; ++d) {
      double count = 0.0;
      for (const std::string& tok : docs[d]) {
        if (tok == vocab[v]) count += 1.0;
      }
      tf[d][v] = count;
      if (count > 0.0) df[v] += 1.0;
    }
  }
  for (std::size_t d = 0; d < n; ++d) {
    double norm_sq = 0.0;
    for (std::size_t v = 0; v < vocab.size(); ++v) {
      const double idf =
          std::log((1.0 + static_cast<double>(n)) / (1.0 + df[v])) + 1.0;
      tf[d][v] *= idf;
      norm_sq += tf[d][v] * tf[d][v];
    }
    if (norm_sq > 0.0) {
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (double& x : tf[d]) x *= inv;
    }
  }
  return tf;
}

}  // namespace

TEST_CASE("vocabulary assigns ids after the reserved pad and unk slots") {
  const LabeledCorpus corpus =
      make_corpus({{"A", {"salt", "pepper"}}, {"B", {"salt", "cumin"}}});
  const Vocabulary vocab = Vocabulary::build(corpus.records(), 1);
  CHECK(Vocabulary::kPad == 0);
  CHECK(Vocabulary::kUnk == 1);
  CHECK(Vocabulary::kFirstReal == 2);
  CHECK(vocab.size() == 5);
  CHECK(vocab.real_size() == 3);
  for (const std::string& token : {"salt", "pepper", "cumin"}) {
    const auto id = vocab.id(token);
    REQUIRE(id.has_value());
    CHECK(*id >= Vocabulary::kFirstReal);
    CHECK(vocab.token(*id) == token);
  }
  CHECK_FALSE(vocab.id("saffron").has_value());
}

TEST_CASE("document frequency counts documents, not occurrences") {
  const LabeledCorpus corpus = make_corpus(
      {{"A", {"salt", "salt", "salt"}}, {"B", {"salt", "cumin"}}, {"A", {"cumin"}}});
  const Vocabulary vocab = Vocabulary::build(corpus.records(), 1);
  CHECK(vocab.doc_freq(*vocab.id("salt")) == 2);
  CHECK(vocab.doc_freq(*vocab.id("cumin")) == 2);
  CHECK(vocab.n_docs() == 3);
}

TEST_CASE("min_df prunes rare tokens") {
  const LabeledCorpus corpus = make_corpus(
      {{"A", {"common", "rare"}}, {"B", {"common"}}, {"A", {"common"}}});
  const Vocabulary vocab = Vocabulary::build(corpus.records(), 2);
  CHECK(vocab.id("common").has_value());
  CHECK_FALSE(vocab.id("rare").has_value());
  CHECK(vocab.min_df() == 2);
}

TEST_CASE("tfidf matches the dense reference on random corpora") {
  Prng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n_docs = 2 + rng.below(18);
    const std::size_t vocab_size = 3 + rng.below(20);
    const LabeledCorpus corpus = random_corpus(rng, n_docs, vocab_size, 2);

    const Vocabulary vocab = Vocabulary::build(corpus.records(), 1);

    std::vector<std::string> vocab_tokens;
    for (std::uint32_t id = Vocabulary::kFirstReal; id < vocab.size(); ++id) {
      vocab_tokens.push_back(vocab.token(id));
    }
    std::vector<std::vector<std::string>> docs;
    for (std::size_t d = 0; d < corpus.size(); ++d) docs.push_back(corpus.record(d).tokens);
    const auto reference = dense_tfidf(docs, vocab_tokens);

    for (std::size_t d = 0; d < corpus.size(); ++d) {
      const SparseVector got = tfidf_vector(corpus.record(d), vocab);
      std::map<std::uint32_t, double> got_map;
      for (const SparseEntry& e : got.entries) got_map[e.index] = e.weight;
      for (std::size_t v = 0; v < vocab_tokens.size(); ++v) {
        const std::uint32_t id = *vocab.id(vocab_tokens[v]);
        const double want = reference[d][v];
        const double have = got_map.count(id) ? got_map[id] : 0.0;
        REQUIRE(std::abs(have - want) < 1e-9);
      }
    }
  }
}

TEST_CASE("tfidf entries are sorted, unique and unit norm") {
  Prng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const LabeledCorpus corpus = random_corpus(rng, 10, 15, 2);
    const Vocabulary vocab = Vocabulary::build(corpus.records(), 1);
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      const SparseVector v = tfidf_vector(corpus.record(d), vocab);
      for (std::size_t i = 1; i < v.entries.size(); ++i) {
        REQUIRE(v.entries[i - 1].index < v.entries[i].index);
      }
      if (!v.empty()) {
        CHECK(std::abs(v.norm() - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("tfidf ignores token order entirely") {
  Prng rng(43);
  const LabeledCorpus corpus = random_corpus(rng, 8, 12, 2, 20);
  const Vocabulary vocab = Vocabulary::build(corpus.records(), 1);
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const SparseVector base = tfidf_vector(corpus.record(d), vocab);
    RecipeRecord shuffled = corpus.record(d);
    for (int perm = 0; perm < 25; ++perm) {
      rng.shuffle(shuffled.tokens);
      const SparseVector v = tfidf_vector(shuffled, vocab);
      REQUIRE(v == base);  // bitwise equality, not approximate
    }
  }
}

TEST_CASE("unknown tokens are skipped in tfidf but marked in sequences") {
  const LabeledCorpus corpus = make_corpus({{"A", {"salt", "pepper"}}});
  const Vocabulary vocab = Vocabulary::build(corpus.records(), 1);
  const RecipeRecord query = make_record(99, "A", {"salt", "saffron"});

  const SparseVector sparse = tfidf_vector(query, vocab);
  REQUIRE(sparse.entries.size() == 1);
  CHECK(sparse.entries[0].index == *vocab.id("salt"));

  const TokenSequence seq = encode_sequence(query, vocab, 4);
  CHECK(seq.ids[0] == *vocab.id("salt"));
  CHECK(seq.ids[1] == Vocabulary::kUnk);
}

TEST_CASE("count_vector reports raw term counts") {
  const LabeledCorpus corpus = make_corpus({{"A", {"a", "b", "a", "a"}}});
  const Vocabulary vocab = Vocabulary::build(corpus.records(), 1);
  const SparseVector counts = count_vector(corpus.record(0), vocab);
  REQUIRE(counts.entries.size() == 2);
  CHECK(counts.at(*vocab.id("a")) == doctest::Approx(3.0));
  CHECK(counts.at(*vocab.id("b")) == doctest::Approx(1.0));
}

TEST_CASE("encode_sequence pads right and truncates the tail") {
  const LabeledCorpus corpus = make_corpus({{"A", {"a", "b"}}});
  const Vocabulary vocab = Vocabulary::build(corpus.records(), 1);

  const TokenSequence short_seq = encode_sequence(corpus.record(0), vocab, 4);
  REQUIRE(short_seq.ids.size() == 4);
  CHECK(short_seq.true_length == 2);
  CHECK(short_seq.ids[0] == *vocab.id("a"));
  CHECK(short_seq.ids[1] == *vocab.id("b"));
  CHECK(short_seq.ids[2] == Vocabulary::kPad);
  CHECK(short_seq.ids[3] == Vocabulary::kPad);

  RecipeRecord long_record = make_record(5, "A", {});
  for (int i = 0; i < 10; ++i) long_record.tokens.push_back(i % 2 == 0 ? "a" : "b");
  const TokenSequence long_seq = encode_sequence(long_record, vocab, 4);
  REQUIRE(long_seq.ids.size() == 4);
  CHECK(long_seq.true_length == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(long_seq.ids[i] == *vocab.id(long_record.tokens[i]));
  }
}

TEST_CASE("encode_sequence preserves order where tfidf does not") {
  const LabeledCorpus corpus = make_corpus({{"A", {"a", "b"}}});
  const Vocabulary vocab = Vocabulary::build(corpus.records(), 1);
  const RecipeRecord ab = make_record(1, "A", {"a", "b"});
  const RecipeRecord ba = make_record(1, "A", {"b", "a"});
  CHECK(encode_sequence(ab, vocab, 4).ids != encode_sequence(ba, vocab, 4).ids);
  CHECK(tfidf_vector(ab, vocab) == tfidf_vector(ba, vocab));
}

TEST_CASE("vocabulary json round trip preserves everything including the hash") {
  Prng rng(44);
  const LabeledCorpus corpus = random_corpus(rng, 15, 25, 3);
  const Vocabulary vocab = Vocabulary::build(corpus.records(), 2);
  TempDir dir;
  save_vocabulary(vocab, dir.file("vocab.json"));
  const Vocabulary loaded = load_vocabulary(dir.file("vocab.json"));
  CHECK(loaded == vocab);
  CHECK(loaded.hash() == vocab.hash());
  save_vocabulary(loaded, dir.file("vocab2.json"));
  CHECK(read_file(dir.file("vocab.json")) == read_file(dir.file("vocab2.json")));
}

TEST_CASE("different vocabularies hash differently") {
  const LabeledCorpus a = make_corpus({{"A", {"salt", "pepper"}}});
  const LabeledCorpus b = make_corpus({{"A", {"salt", "cumin"}}});
  const Vocabulary va =
      Vocabulary::build(a.records(), 1);
  const Vocabulary vb =
      Vocabulary::build(b.records(), 1);
  CHECK(va.hash() != vb.hash());
}
