#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cuisine/corpus.hpp"

namespace cuisine {

/// Token cleaning options. Serialized alongside every trained model so
/// inference applies identical preprocessing. The character policy is fixed:
/// letters, single internal spaces and single internal hyphens survive,
/// digits and every other symbol are stripped.
struct CleaningConfig {
  bool lowercase = true;
  bool lemmatize = true;
  /// Optional extra exception pairs merged over the built-in table.
  std::filesystem::path lemma_exceptions;

  bool operator==(const CleaningConfig&) const = default;
};

/// Cleaned lowercase token, or nothing if stripping leaves an empty string.
std::optional<std::string> clean_token(std::string_view raw,
                                       const CleaningConfig& config);

/// Deterministic suffix-rule lemmatizer.
///
/// A single cascade pass over a word applies, in order, the first matching
/// rule:
///   1. exception table lookup (whole word)
///   2. "...ies" (len >= 5)            -> "...y"
///   3. "...sses"                      -> drop "es"
///   4. "...ches|shes|xes|zes|oes"     -> drop "es"
///   5. "...ss" or "...us" or "...is"  -> unchanged
///   6. "...s" (len >= 4)              -> drop "s"
///   7. "...ing" (len >= 6)            -> drop "ing", undouble a trailing
///      doubled consonant except ll/ss/zz
///   8. "...ied" (len >= 5)            -> "...y"
///   9. "...ed" (len >= 5)             -> drop "ed", undouble as in rule 7
/// The cascade is iterated until a fixed point, so the function is
/// idempotent by construction. Multi-word tokens are lemmatized on their
/// last space-separated word only.
class Lemmatizer {
 public:
  Lemmatizer();

  /// Merges `inflected<TAB>lemma` pairs from a plain-text file; later pairs
  /// win over the built-in table.
  void load_exceptions(const std::filesystem::path& path);
  void add_exception(std::string inflected, std::string lemma);

  /// Lemma of a single word (no spaces).
  std::string lemma_word(const std::string& word) const;
  /// Lemma of a possibly multi-word token; only the last word changes.
  std::string lemma(const std::string& token) const;

 private:
  std::string cascade(const std::string& word) const;
  std::unordered_map<std::string, std::string> exceptions_;
};

/// Convenience wrapper over a shared default-constructed Lemmatizer.
std::string lemmatize(const std::string& token);

struct PreprocessResult {
  LabeledCorpus corpus;
  std::size_t dropped_records = 0;
  std::vector<std::string> warnings;
};

/// Cleans and lemmatizes every record, preserving token and record order.
/// Records whose token list becomes empty are dropped with a warning; the
/// label space of the input corpus is kept so label ids stay stable.
PreprocessResult preprocess_corpus(const LabeledCorpus& corpus,
                                   const CleaningConfig& config);

}  // namespace cuisine
