#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace cuisine {

/// One recipe: the class label plus the ordered token sequence of
/// ingredients, processes and utensils. Token order is preserved exactly as
/// loaded; duplicates are kept.
struct RecipeRecord {
  std::int64_t id = 0;
  std::string continent;
  std::string cuisine;
  std::vector<std::string> tokens;

  bool operator==(const RecipeRecord&) const = default;
};

/// Immutable record collection with a dense label space. Label ids are
/// assigned in first-occurrence order and stay stable for the corpus
/// lifetime.
class LabeledCorpus {
 public:
  LabeledCorpus() = default;

  /// Builds the label set from the records in first-occurrence order.
  static LabeledCorpus from_records(std::vector<RecipeRecord> records);

  /// Keeps an existing label space (used when preprocessing drops records).
  static LabeledCorpus with_labels(std::vector<RecipeRecord> records,
                                   std::vector<std::string> labels);

  const std::vector<RecipeRecord>& records() const { return records_; }
  const RecipeRecord& record(std::size_t i) const { return records_[i]; }
  const std::vector<std::string>& labels() const { return labels_; }

  std::size_t size() const { return records_.size(); }
  int num_classes() const { return static_cast<int>(labels_.size()); }

  /// Dense id of a cuisine name; throws if the name is not in the label set.
  int label_id(const std::string& cuisine) const;
  int label_of(std::size_t record_index) const;

  bool operator==(const LabeledCorpus& other) const {
    return records_ == other.records_ && labels_ == other.labels_;
  }

 private:
  std::vector<RecipeRecord> records_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> label_ids_;
};

enum class CorpusFormat { jsonl, csv };

CorpusFormat parse_corpus_format(const std::string& name);

struct LoadResult {
  LabeledCorpus corpus;
  std::size_t rows_total = 0;
  std::size_t rows_ok = 0;
  /// One entry per rejected row, with its 1-based line number.
  std::vector<std::string> warnings;
};

/// Loads a corpus. Malformed rows are skipped with a warning; an unreadable
/// file or a file with zero valid rows is fatal.
LoadResult load_corpus(const std::filesystem::path& path, CorpusFormat format);

void save_corpus(const LabeledCorpus& corpus, const std::filesystem::path& path,
                 CorpusFormat format);

struct SplitRatios {
  int train = 7;
  int validation = 1;
  int test = 2;

  bool operator==(const SplitRatios&) const = default;
};

struct SplitSizes {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

/// Partition sizes under the floor-then-remainder rule:
/// |train| = floor(N * train/R), |validation| = floor(N * validation/R),
/// |test| = N - |train| - |validation|, with R the ratio total.
SplitSizes split_sizes(std::size_t n, const SplitRatios& ratios);

struct SplitOptions {
  SplitRatios ratios;
  std::uint64_t seed = 0;
  bool stratified = true;
};

/// Disjoint index lists into the corpus; their union covers every record.
struct DataSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;

  bool operator==(const DataSplit&) const = default;
};

/// Deterministic shuffled split. Unstratified mode applies the
/// floor-then-remainder size rule to the whole corpus. Stratified mode
/// apportions each class by largest remainder, keeping every class within
/// one record of its exact proportional share per partition; a class with
/// fewer than 3 records is placed wholly in train with a warning.
DataSplit split(const LabeledCorpus& corpus, const SplitOptions& options,
                std::vector<std::string>* warnings = nullptr);

/// Partition membership by record id, so a manifest stays valid as long as
/// the data file it was derived from is unchanged.
struct SplitManifest {
  std::uint64_t seed = 0;
  SplitRatios ratios;
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> validation;
  std::vector<std::int64_t> test;
};

SplitManifest make_split_manifest(const LabeledCorpus& corpus,
                                  const DataSplit& split, std::uint64_t seed,
                                  const SplitRatios& ratios);

/// Maps the manifest's record ids back onto corpus indices. Throws
/// FormatError when an id is unknown or the corpus has duplicate ids.
DataSplit resolve_split(const SplitManifest& manifest,
                        const LabeledCorpus& corpus);

void save_split_manifest(const SplitManifest& manifest,
                         const std::filesystem::path& path);
SplitManifest load_split_manifest(const std::filesystem::path& path);

struct FrequencyRow {
  std::int64_t threshold = 0;
  std::size_t features_above = 0;  // distinct tokens with occurrences > threshold
  std::size_t features_below = 0;  // distinct tokens with occurrences < threshold
};

struct FrequencyReport {
  std::vector<FrequencyRow> rows;
  std::size_t distinct_features = 0;
  std::size_t total_occurrences = 0;
};

FrequencyReport frequency_table(const LabeledCorpus& corpus,
                                std::span<const std::int64_t> thresholds);

/// 1 - incidences / (N * V) with incidences the number of distinct
/// (document, token) pairs and V the number of distinct tokens in the corpus.
double sparsity_ratio(const LabeledCorpus& corpus);

}  // namespace cuisine
