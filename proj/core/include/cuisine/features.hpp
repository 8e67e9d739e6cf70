#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cuisine/corpus.hpp"

namespace cuisine {

/// Dense bijective token<->id map with document frequencies, fitted on the
/// training split only. Ids 0 and 1 are reserved for PAD and UNK; real
/// tokens start at 2, in first-occurrence order over the fit records.
class Vocabulary {
 public:
  static constexpr std::uint32_t kPad = 0;
  static constexpr std::uint32_t kUnk = 1;
  static constexpr std::uint32_t kFirstReal = 2;

  Vocabulary() = default;

  /// Tokens with document frequency < min_df are excluded.
  static Vocabulary build(std::span<const RecipeRecord> train_records,
                          std::uint32_t min_df = 1);

  /// Reassembles a vocabulary from persisted parts (see model_io).
  static Vocabulary from_parts(std::vector<std::string> real_tokens,
                               std::vector<std::uint32_t> real_doc_freq,
                               std::size_t n_docs, std::uint32_t min_df);

  /// Total id count including PAD and UNK.
  std::size_t size() const { return id_to_token_.size(); }
  std::size_t real_size() const { return id_to_token_.size() - kFirstReal; }

  std::optional<std::uint32_t> id(std::string_view token) const;
  const std::string& token(std::uint32_t id) const { return id_to_token_[id]; }
  std::uint32_t doc_freq(std::uint32_t id) const { return doc_freq_[id]; }
  std::size_t n_docs() const { return n_docs_; }
  std::uint32_t min_df() const { return min_df_; }

  /// FNV-1a over the canonical serialization; used to pair models with the
  /// vocabulary they were trained against.
  std::uint64_t hash() const;

  bool operator==(const Vocabulary& other) const {
    return id_to_token_ == other.id_to_token_ && doc_freq_ == other.doc_freq_ &&
           n_docs_ == other.n_docs_ && min_df_ == other.min_df_;
  }

 private:
  std::vector<std::string> id_to_token_;
  std::vector<std::uint32_t> doc_freq_;
  std::unordered_map<std::string, std::uint32_t> token_to_id_;
  std::size_t n_docs_ = 0;
  std::uint32_t min_df_ = 1;
};

struct SparseEntry {
  std::uint32_t index = 0;
  double weight = 0.0;

  bool operator==(const SparseEntry&) const = default;
};

/// Sparse document vector with strictly increasing indices.
struct SparseVector {
  std::vector<SparseEntry> entries;

  bool empty() const { return entries.empty(); }
  double norm() const;
  /// Value at a feature index, 0 when absent. Binary search.
  double at(std::uint32_t index) const;
  double dot(std::span<const double> dense) const;

  bool operator==(const SparseVector&) const = default;
};

/// TF-IDF vector: weight(t) = count(t) * (ln((1+N)/(1+df)) + 1), then L2
/// normalization. Out-of-vocabulary tokens are skipped; a record with no
/// in-vocabulary token yields the zero vector.
SparseVector tfidf_vector(const RecipeRecord& record, const Vocabulary& vocab);

/// Raw term counts over vocabulary ids (multinomial Naive Bayes input).
SparseVector count_vector(const RecipeRecord& record, const Vocabulary& vocab);

/// The smoothed idf used by tfidf_vector, exposed for reporting.
double idf_weight(const Vocabulary& vocab, std::uint32_t id);

/// Fixed-length id sequence: PAD-right to max_len, truncate-tail beyond.
struct TokenSequence {
  std::vector<std::uint32_t> ids;
  std::size_t true_length = 0;
};

TokenSequence encode_sequence(const RecipeRecord& record, const Vocabulary& vocab,
                              std::size_t max_len);

}  // namespace cuisine
