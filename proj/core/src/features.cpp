#include "cuisine/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cuisine/error.hpp"

namespace cuisine {

Vocabulary Vocabulary::build(std::span<const RecipeRecord> train_records,
                             std::uint32_t min_df) {
  if (min_df < 1) throw ConfigError("vocabulary: min_df must be >= 1");

  std::unordered_map<std::string, std::uint32_t> df;
  for (const auto& rec : train_records) {
    std::unordered_map<std::string, bool> seen;
    for (const auto& t : rec.tokens) {
      if (seen.emplace(t, true).second) ++df[t];
    }
  }

  Vocabulary v;
  v.n_docs_ = train_records.size();
  v.min_df_ = min_df;
  v.id_to_token_ = {"<pad>", "<unk>"};
  v.doc_freq_ = {0, 0};
  for (const auto& rec : train_records) {
    for (const auto& t : rec.tokens) {
      if (v.token_to_id_.contains(t)) continue;
      const auto it = df.find(t);
      if (it->second < min_df) continue;
      const auto id = static_cast<std::uint32_t>(v.id_to_token_.size());
      v.token_to_id_.emplace(t, id);
      v.id_to_token_.push_back(t);
      v.doc_freq_.push_back(it->second);
    }
  }
  if (v.real_size() == 0) throw Error("vocabulary: no token passed the min_df filter");
  return v;
}

Vocabulary Vocabulary::from_parts(std::vector<std::string> real_tokens,
                                  std::vector<std::uint32_t> real_doc_freq,
                                  std::size_t n_docs, std::uint32_t min_df) {
  if (real_tokens.size() != real_doc_freq.size())
    throw FormatError("vocabulary: tokens and doc_freq lengths disagree");
  Vocabulary v;
  v.n_docs_ = n_docs;
  v.min_df_ = min_df;
  v.id_to_token_ = {"<pad>", "<unk>"};
  v.doc_freq_ = {0, 0};
  for (std::size_t i = 0; i < real_tokens.size(); ++i) {
    const auto id = static_cast<std::uint32_t>(v.id_to_token_.size());
    if (!v.token_to_id_.emplace(real_tokens[i], id).second)
      throw FormatError("vocabulary: duplicate token '" + real_tokens[i] + "'");
    v.id_to_token_.push_back(std::move(real_tokens[i]));
    v.doc_freq_.push_back(real_doc_freq[i]);
  }
  return v;
}

std::optional<std::uint32_t> Vocabulary::id(std::string_view token) const {
  const auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Vocabulary::hash() const {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix_byte = [&h](unsigned char b) {
    h ^= b;
    h *= 1099511628211ULL;
  };
  auto mix_u64 = [&](std::uint64_t x) {
    for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(x >> (8 * i)));
  };
  mix_u64(n_docs_);
  mix_u64(min_df_);
  for (std::size_t i = kFirstReal; i < id_to_token_.size(); ++i) {
    for (unsigned char c : id_to_token_[i]) mix_byte(c);
    mix_byte(0);
    mix_u64(doc_freq_[i]);
  }
  return h;
}

double SparseVector::norm() const {
  double acc = 0.0;
  for (const auto& e : entries) acc += e.weight * e.weight;
  return std::sqrt(acc);
}

double SparseVector::at(std::uint32_t index) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), index,
                             [](const SparseEntry& e, std::uint32_t idx) {
                               return e.index < idx;
                             });
  if (it == entries.end() || it->index != index) return 0.0;
  return it->weight;
}

double SparseVector::dot(std::span<const double> dense) const {
  double acc = 0.0;
  for (const auto& e : entries) acc += e.weight * dense[e.index];
  return acc;
}

namespace {

// Ordered id -> count map; the ordered walk makes downstream float
// accumulation independent of token order within the record.
std::map<std::uint32_t, std::int64_t> in_vocab_counts(const RecipeRecord& record,
                                                      const Vocabulary& vocab) {
  std::map<std::uint32_t, std::int64_t> counts;
  for (const auto& t : record.tokens) {
    if (auto id = vocab.id(t)) ++counts[*id];
  }
  return counts;
}

}  // namespace

double idf_weight(const Vocabulary& vocab, std::uint32_t id) {
  const double n = static_cast<double>(vocab.n_docs());
  const double df = static_cast<double>(vocab.doc_freq(id));
  return std::log((1.0 + n) / (1.0 + df)) + 1.0;
}

SparseVector tfidf_vector(const RecipeRecord& record, const Vocabulary& vocab) {
  SparseVector v;
  double sq = 0.0;
  for (const auto& [id, count] : in_vocab_counts(record, vocab)) {
    const double w = static_cast<double>(count) * idf_weight(vocab, id);
    v.entries.push_back({id, w});
    sq += w * w;
  }
  if (!v.entries.empty()) {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& e : v.entries) e.weight *= inv;
  }
  return v;
}

SparseVector count_vector(const RecipeRecord& record, const Vocabulary& vocab) {
  SparseVector v;
  for (const auto& [id, count] : in_vocab_counts(record, vocab))
    v.entries.push_back({id, static_cast<double>(count)});
  return v;
}

TokenSequence encode_sequence(const RecipeRecord& record, const Vocabulary& vocab,
                              std::size_t max_len) {
  if (max_len < 1) throw ConfigError("encode_sequence: max_len must be >= 1");
  TokenSequence seq;
  seq.ids.assign(max_len, Vocabulary::kPad);
  std::size_t pos = 0;
  for (const auto& t : record.tokens) {
    if (pos == max_len) break;
    seq.ids[pos++] = vocab.id(t).value_or(Vocabulary::kUnk);
  }
  seq.true_length = pos;
  return seq;
}

}  // namespace cuisine
