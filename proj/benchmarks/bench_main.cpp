#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "cuisine/corpus.hpp"
#include "cuisine/features.hpp"
#include "cuisine/lstm.hpp"
#include "cuisine/naive_bayes.hpp"
#include "cuisine/prng.hpp"
#include "cuisine/transformer.hpp"

namespace {

using namespace cuisine;

/// Synthetic corpus with Zipf-flavored token reuse so vocabulary size and
/// document length resemble real recipe data.
std::vector<RecipeRecord> synth_records(std::size_t n, std::size_t vocab,
                                        std::size_t tokens_per_doc,
                                        std::uint64_t seed) {
  Prng rng(seed);
  std::vector<RecipeRecord> records(n);
  for (std::size_t i = 0; i < n; ++i) {
    records[i].id = static_cast<std::int64_t>(i);
    records[i].cuisine = "c" + std::to_string(i % 5);
    for (std::size_t t = 0; t < tokens_per_doc; ++t) {
      const std::uint64_t a = rng.below(vocab);
      const std::uint64_t b = rng.below(vocab);
      records[i].tokens.push_back("tok" + std::to_string(std::min(a, b)));
    }
  }
  return records;
}

void BM_VocabularyBuild(benchmark::State& state) {
  const auto records = synth_records(
      static_cast<std::size_t>(state.range(0)), 2000, 40, 7);
  for (auto _ : state) {
    Vocabulary v = Vocabulary::build(records, 1);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_VocabularyBuild)->Arg(200)->Arg(1000);

void BM_TfidfVector(benchmark::State& state) {
  const auto records = synth_records(500, 2000, 40, 7);
  const Vocabulary vocab = Vocabulary::build(records, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    SparseVector x = tfidf_vector(records[i % records.size()], vocab);
    benchmark::DoNotOptimize(x);
    ++i;
  }
}
BENCHMARK(BM_TfidfVector);

void BM_NaiveBayesFit(benchmark::State& state) {
  const auto records = synth_records(
      static_cast<std::size_t>(state.range(0)), 1000, 30, 11);
  const Vocabulary vocab = Vocabulary::build(records, 1);
  LabeledCorpus corpus = LabeledCorpus::from_records(records);
  std::vector<SparseVector> docs;
  std::vector<int> labels;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    docs.push_back(count_vector(corpus.record(i), vocab));
    labels.push_back(corpus.label_of(i));
  }
  for (auto _ : state) {
    NaiveBayes model;
    model.fit(docs, labels, corpus.num_classes(), vocab.real_size());
    benchmark::DoNotOptimize(model);
  }
}
BENCHMARK(BM_NaiveBayesFit)->Arg(200)->Arg(1000);

TokenSequence synth_sequence(std::size_t len, std::size_t vocab,
                             std::uint64_t seed) {
  Prng rng(seed);
  TokenSequence s;
  for (std::size_t t = 0; t < len; ++t) {
    s.ids.push_back(static_cast<std::uint32_t>(Vocabulary::kFirstReal +
                                               rng.below(vocab)));
  }
  s.true_length = len;
  return s;
}

void BM_LstmForward(benchmark::State& state) {
  TrainConfig config;
  config.max_len = 64;
  LstmModel model(500, 26, config);
  const TokenSequence seq = synth_sequence(
      static_cast<std::size_t>(state.range(0)), 498, 13);
  for (auto _ : state) {
    auto logits = model.forward(seq);
    benchmark::DoNotOptimize(logits);
  }
}
BENCHMARK(BM_LstmForward)->Arg(16)->Arg(64);

void BM_TransformerForward(benchmark::State& state) {
  TrainConfig config;
  config.max_len = 64;
  TransformerModel model(500, 26, config);
  const TokenSequence seq = synth_sequence(
      static_cast<std::size_t>(state.range(0)), 498, 13);
  for (auto _ : state) {
    auto logits = model.forward(seq);
    benchmark::DoNotOptimize(logits);
  }
}
BENCHMARK(BM_TransformerForward)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
