#include "cuisine/preprocess.hpp"

#include <cctype>
#include <fstream>

#include "cuisine/error.hpp"

namespace cuisine {

std::optional<std::string> clean_token(std::string_view raw,
                                       const CleaningConfig& config) {
  std::string mapped;
  mapped.reserve(raw.size());
  for (unsigned char ch : raw) {
    if (std::isalpha(ch)) {
      mapped.push_back(config.lowercase ? static_cast<char>(std::tolower(ch))
                                        : static_cast<char>(ch));
    } else if (ch == ' ' || ch == '\t') {
      mapped.push_back(' ');
    } else if (ch == '-') {
      mapped.push_back('-');
    }
    // digits and all other symbols are dropped
  }

  // Split on spaces, normalize hyphen runs inside each part, rejoin with
  // single spaces.
  std::string out;
  std::string part;
  auto flush_part = [&]() {
    // collapse hyphen runs, trim hyphens at the ends
    std::string norm;
    for (char ch : part) {
      if (ch == '-' && (norm.empty() || norm.back() == '-')) continue;
      norm.push_back(ch);
    }
    while (!norm.empty() && norm.back() == '-') norm.pop_back();
    if (!norm.empty()) {
      if (!out.empty()) out.push_back(' ');
      out += norm;
    }
    part.clear();
  };
  for (char ch : mapped) {
    if (ch == ' ') {
      flush_part();
    } else {
      part.push_back(ch);
    }
  }
  flush_part();

  if (out.empty()) return std::nullopt;
  return out;
}

namespace {

// Built-in exception pairs: irregular plurals, e-restoration for -ed/-ing
// stems, and words whose surface form looks inflected but is not.
constexpr const char* kDefaultExceptions[][2] = {
    {"molasses", "molasses"}, {"pudding", "pudding"},  {"dumpling", "dumpling"},
    {"spring", "spring"},     {"string", "string"},    {"icing", "icing"},
    {"leaves", "leaf"},       {"loaves", "loaf"},      {"knives", "knife"},
    {"halves", "half"},       {"cookies", "cookie"},   {"baked", "bake"},
    {"baking", "bake"},       {"sliced", "slice"},     {"slicing", "slice"},
    {"diced", "dice"},        {"dicing", "dice"},      {"minced", "mince"},
    {"mincing", "mince"},     {"served", "serve"},     {"serving", "serve"},
    {"grated", "grate"},      {"grating", "grate"},    {"glazed", "glaze"},
    {"glazing", "glaze"},     {"cubed", "cube"},       {"cubing", "cube"},
    {"removed", "remove"},    {"reduced", "reduce"},   {"combined", "combine"},
};

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

bool is_vowel(char c) {
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// stirr -> stir, chopp -> chop; ll/ss/zz stay (grill, press, buzz).
void undouble_tail(std::string& s) {
  const std::size_t n = s.size();
  if (n < 2) return;
  const char last = s[n - 1];
  if (s[n - 2] != last || is_vowel(last)) return;
  if (last == 'l' || last == 's' || last == 'z') return;
  s.pop_back();
}

}  // namespace

Lemmatizer::Lemmatizer() {
  for (const auto& pair : kDefaultExceptions) exceptions_[pair[0]] = pair[1];
}

void Lemmatizer::load_exceptions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open exception dictionary: " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw FormatError("exception dictionary line " + std::to_string(line_no) +
                        ": expected inflected<TAB>lemma");
    exceptions_[line.substr(0, tab)] = line.substr(tab + 1);
  }
}

void Lemmatizer::add_exception(std::string inflected, std::string lemma) {
  exceptions_[std::move(inflected)] = std::move(lemma);
}

std::string Lemmatizer::cascade(const std::string& word) const {
  if (auto it = exceptions_.find(word); it != exceptions_.end()) return it->second;
  const std::size_t n = word.size();

  if (ends_with(word, "ies") && n >= 5) return word.substr(0, n - 3) + "y";
  if (ends_with(word, "sses")) return word.substr(0, n - 2);
  if (ends_with(word, "ches") || ends_with(word, "shes") ||
      ends_with(word, "xes") || ends_with(word, "zes") || ends_with(word, "oes"))
    return word.substr(0, n - 2);
  if (ends_with(word, "ss") || ends_with(word, "us") || ends_with(word, "is"))
    return word;
  if (ends_with(word, "s") && n >= 4) return word.substr(0, n - 1);

  if (ends_with(word, "ing") && n >= 6) {
    std::string stem = word.substr(0, n - 3);
    undouble_tail(stem);
    return stem;
  }
  if (ends_with(word, "ied") && n >= 5) return word.substr(0, n - 3) + "y";
  if (ends_with(word, "ed") && n >= 5) {
    std::string stem = word.substr(0, n - 2);
    undouble_tail(stem);
    return stem;
  }
  return word;
}

std::string Lemmatizer::lemma_word(const std::string& word) const {
  // Iterate the cascade to a fixed point. The cap only matters if a loaded
  // exception table contains a cycle.
  std::string cur = word;
  for (std::size_t i = 0; i < word.size() + 2; ++i) {
    std::string next = cascade(cur);
    if (next == cur) break;
    cur = std::move(next);
  }
  return cur;
}

std::string Lemmatizer::lemma(const std::string& token) const {
  const auto last_space = token.rfind(' ');
  if (last_space == std::string::npos) return lemma_word(token);
  return token.substr(0, last_space + 1) + lemma_word(token.substr(last_space + 1));
}

std::string lemmatize(const std::string& token) {
  static const Lemmatizer instance;
  return instance.lemma(token);
}

PreprocessResult preprocess_corpus(const LabeledCorpus& corpus,
                                   const CleaningConfig& config) {
  Lemmatizer lemmatizer;
  if (!config.lemma_exceptions.empty())
    lemmatizer.load_exceptions(config.lemma_exceptions);

  PreprocessResult result;
  std::vector<RecipeRecord> kept;
  kept.reserve(corpus.size());
  for (const auto& rec : corpus.records()) {
    RecipeRecord out;
    out.id = rec.id;
    out.continent = rec.continent;
    out.cuisine = rec.cuisine;
    for (const auto& raw : rec.tokens) {
      auto cleaned = clean_token(raw, config);
      if (!cleaned) continue;
      out.tokens.push_back(config.lemmatize ? lemmatizer.lemma(*cleaned)
                                            : std::move(*cleaned));
    }
    if (out.tokens.empty()) {
      ++result.dropped_records;
      result.warnings.push_back("record " + std::to_string(rec.id) +
                                ": all tokens removed by cleaning, dropped");
      continue;
    }
    kept.push_back(std::move(out));
  }
  if (kept.empty()) throw FormatError("empty corpus after preprocessing");
  result.corpus = LabeledCorpus::with_labels(std::move(kept), corpus.labels());
  return result;
}

}  // namespace cuisine
