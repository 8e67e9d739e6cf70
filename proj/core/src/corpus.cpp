#include "cuisine/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "cuisine/error.hpp"
#include "cuisine/prng.hpp"

namespace cuisine {

using nlohmann::json;

LabeledCorpus LabeledCorpus::from_records(std::vector<RecipeRecord> records) {
  LabeledCorpus c;
  c.records_ = std::move(records);
  for (const auto& r : c.records_) {
    if (c.label_ids_.emplace(r.cuisine, static_cast<int>(c.labels_.size())).second)
      c.labels_.push_back(r.cuisine);
  }
  return c;
}

LabeledCorpus LabeledCorpus::with_labels(std::vector<RecipeRecord> records,
                                         std::vector<std::string> labels) {
  LabeledCorpus c;
  c.records_ = std::move(records);
  c.labels_ = std::move(labels);
  for (std::size_t i = 0; i < c.labels_.size(); ++i)
    c.label_ids_.emplace(c.labels_[i], static_cast<int>(i));
  for (const auto& r : c.records_) {
    if (!c.label_ids_.contains(r.cuisine))
      throw Error("corpus: record cuisine '" + r.cuisine + "' missing from label set");
  }
  return c;
}

int LabeledCorpus::label_id(const std::string& cuisine) const {
  auto it = label_ids_.find(cuisine);
  if (it == label_ids_.end())
    throw Error("corpus: unknown cuisine label '" + cuisine + "'");
  return it->second;
}

int LabeledCorpus::label_of(std::size_t record_index) const {
  return label_id(records_[record_index].cuisine);
}

CorpusFormat parse_corpus_format(const std::string& name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "csv") return CorpusFormat::csv;
  throw ConfigError("unknown corpus format '" + name + "' (expected jsonl or csv)");
}

namespace {

void line_warning(std::vector<std::string>& warnings, std::size_t line_no,
                  const std::string& what) {
  warnings.push_back("line " + std::to_string(line_no) + ": " + what);
}

bool parse_jsonl_row(const std::string& line, std::size_t line_no,
                     RecipeRecord& out, std::vector<std::string>& warnings) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    line_warning(warnings, line_no, "not a JSON object");
    return false;
  }
  for (const char* field : {"id", "continent", "cuisine", "tokens"}) {
    if (!j.contains(field)) {
      line_warning(warnings, line_no, std::string("missing required field '") + field + "'");
      return false;
    }
  }
  if (!j["id"].is_number_integer() || !j["continent"].is_string() ||
      !j["cuisine"].is_string() || !j["tokens"].is_array()) {
    line_warning(warnings, line_no, "field has wrong type");
    return false;
  }
  out.id = j["id"].get<std::int64_t>();
  out.continent = j["continent"].get<std::string>();
  out.cuisine = j["cuisine"].get<std::string>();
  out.tokens.clear();
  for (const auto& t : j["tokens"]) {
    if (!t.is_string()) {
      line_warning(warnings, line_no, "tokens array holds a non-string entry");
      return false;
    }
    out.tokens.push_back(t.get<std::string>());
  }
  if (out.tokens.empty()) {
    line_warning(warnings, line_no, "empty token list, record rejected");
    return false;
  }
  return true;
}

// RFC-4180 field splitter for one logical record (line). Multi-line quoted
// fields are handled by the caller feeding a complete record.
std::vector<std::string> split_csv_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      in_quotes = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

bool parse_csv_row(const std::string& line, std::size_t line_no,
                   RecipeRecord& out, std::vector<std::string>& warnings) {
  auto fields = split_csv_fields(line);
  if (fields.size() != 4) {
    line_warning(warnings, line_no,
                 "expected 4 columns (id,continent,cuisine,tokens), got " +
                     std::to_string(fields.size()));
    return false;
  }
  try {
    out.id = std::stoll(fields[0]);
  } catch (const std::exception&) {
    line_warning(warnings, line_no, "id is not an integer");
    return false;
  }
  out.continent = fields[1];
  out.cuisine = fields[2];
  out.tokens.clear();
  std::string token;
  std::istringstream ts(fields[3]);
  while (std::getline(ts, token, '|')) {
    if (!token.empty()) out.tokens.push_back(token);
  }
  if (out.tokens.empty()) {
    line_warning(warnings, line_no, "empty token list, record rejected");
    return false;
  }
  return true;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

LoadResult load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus file: " + path.string());

  LoadResult result;
  std::vector<RecipeRecord> records;
  std::string line;
  std::size_t line_no = 0;
  bool skipped_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (format == CorpusFormat::csv && !skipped_header) {
      skipped_header = true;
      if (line.rfind("id,", 0) == 0) continue;  // optional header row
    }
    ++result.rows_total;
    RecipeRecord rec;
    const bool ok = format == CorpusFormat::jsonl
                        ? parse_jsonl_row(line, line_no, rec, result.warnings)
                        : parse_csv_row(line, line_no, rec, result.warnings);
    if (ok) {
      records.push_back(std::move(rec));
      ++result.rows_ok;
    }
  }
  if (records.empty()) throw FormatError("empty corpus: " + path.string());
  result.corpus = LabeledCorpus::from_records(std::move(records));
  return result;
}

void save_corpus(const LabeledCorpus& corpus, const std::filesystem::path& path,
                 CorpusFormat format) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus file: " + path.string());
  if (format == CorpusFormat::jsonl) {
    for (const auto& r : corpus.records()) {
      json j;
      j["id"] = r.id;
      j["continent"] = r.continent;
      j["cuisine"] = r.cuisine;
      j["tokens"] = r.tokens;
      out << j.dump() << '\n';
    }
  } else {
    out << "id,continent,cuisine,tokens\n";
    for (const auto& r : corpus.records()) {
      std::string joined;
      for (std::size_t i = 0; i < r.tokens.size(); ++i) {
        if (i) joined.push_back('|');
        joined += r.tokens[i];
      }
      out << r.id << ',' << csv_escape(r.continent) << ',' << csv_escape(r.cuisine)
          << ',' << csv_escape(joined) << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
}

SplitSizes split_sizes(std::size_t n, const SplitRatios& ratios) {
  if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0)
    throw ConfigError("split ratios must be positive");
  const std::size_t total = static_cast<std::size_t>(ratios.train) +
                            static_cast<std::size_t>(ratios.validation) +
                            static_cast<std::size_t>(ratios.test);
  SplitSizes s;
  s.train = n * static_cast<std::size_t>(ratios.train) / total;
  s.validation = n * static_cast<std::size_t>(ratios.validation) / total;
  s.test = n - s.train - s.validation;
  return s;
}

namespace {

/// Largest-remainder apportionment of n slots over the three ratio shares.
/// Every partition ends within 1 of its exact proportional share n*r/R,
/// which is what keeps stratified splits proportional per class.
SplitSizes proportional_sizes(std::size_t n, const SplitRatios& ratios) {
  const std::size_t r[3] = {static_cast<std::size_t>(ratios.train),
                            static_cast<std::size_t>(ratios.validation),
                            static_cast<std::size_t>(ratios.test)};
  const std::size_t total = r[0] + r[1] + r[2];
  std::size_t base[3];
  std::size_t rem[3];
  std::size_t assigned = 0;
  for (int p = 0; p < 3; ++p) {
    base[p] = n * r[p] / total;
    rem[p] = n * r[p] % total;
    assigned += base[p];
  }
  for (std::size_t left = n - assigned; left > 0; --left) {
    int best = 0;
    for (int p = 1; p < 3; ++p) {
      if (rem[p] > rem[best]) best = p;
    }
    ++base[best];
    rem[best] = 0;
  }
  return {base[0], base[1], base[2]};
}

void assign_partitions(std::vector<std::size_t> indices, const SplitSizes& sizes,
                       Prng& rng, DataSplit& out) {
  rng.shuffle(indices);
  out.train.insert(out.train.end(), indices.begin(),
                   indices.begin() + static_cast<std::ptrdiff_t>(sizes.train));
  out.validation.insert(
      out.validation.end(), indices.begin() + static_cast<std::ptrdiff_t>(sizes.train),
      indices.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.validation));
  out.test.insert(out.test.end(),
                  indices.begin() + static_cast<std::ptrdiff_t>(sizes.train + sizes.validation),
                  indices.end());
}

}  // namespace

DataSplit split(const LabeledCorpus& corpus, const SplitOptions& options,
                std::vector<std::string>* warnings) {
  if (corpus.size() == 0) throw Error("split: empty corpus");
  DataSplit result;
  Prng rng(options.seed);

  if (!options.stratified) {
    std::vector<std::size_t> indices(corpus.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    assign_partitions(std::move(indices), split_sizes(indices.size(), options.ratios),
                      rng, result);
    return result;
  }

  // Group record indices per class, in record order, then split each class
  // with its own derived stream so class order does not perturb the draws.
  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(corpus.num_classes()));
  for (std::size_t i = 0; i < corpus.size(); ++i)
    by_class[static_cast<std::size_t>(corpus.label_of(i))].push_back(i);

  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& indices = by_class[c];
    if (indices.empty()) continue;
    if (indices.size() < 3) {
      if (warnings)
        warnings->push_back("class '" + corpus.labels()[c] + "' has only " +
                            std::to_string(indices.size()) +
                            " records; placed wholly in train");
      result.train.insert(result.train.end(), indices.begin(), indices.end());
      continue;
    }
    Prng class_rng = rng.derive(c);
    assign_partitions(std::move(indices), proportional_sizes(indices.size(), options.ratios),
                      class_rng, result);
  }
  return result;
}

SplitManifest make_split_manifest(const LabeledCorpus& corpus,
                                  const DataSplit& split, std::uint64_t seed,
                                  const SplitRatios& ratios) {
  SplitManifest m;
  m.seed = seed;
  m.ratios = ratios;
  auto ids_of = [&](const std::vector<std::size_t>& part) {
    std::vector<std::int64_t> ids;
    ids.reserve(part.size());
    for (std::size_t idx : part) ids.push_back(corpus.record(idx).id);
    return ids;
  };
  m.train = ids_of(split.train);
  m.validation = ids_of(split.validation);
  m.test = ids_of(split.test);
  return m;
}

DataSplit resolve_split(const SplitManifest& manifest,
                        const LabeledCorpus& corpus) {
  std::unordered_map<std::int64_t, std::size_t> index_of;
  index_of.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!index_of.emplace(corpus.record(i).id, i).second)
      throw FormatError("corpus has duplicate record id " +
                        std::to_string(corpus.record(i).id) +
                        "; split manifest cannot be resolved");
  }
  auto indices_of = [&](const std::vector<std::int64_t>& ids) {
    std::vector<std::size_t> part;
    part.reserve(ids.size());
    for (std::int64_t id : ids) {
      auto it = index_of.find(id);
      if (it == index_of.end())
        throw FormatError("split manifest references unknown record id " +
                          std::to_string(id));
      part.push_back(it->second);
    }
    return part;
  };
  DataSplit s;
  s.train = indices_of(manifest.train);
  s.validation = indices_of(manifest.validation);
  s.test = indices_of(manifest.test);
  return s;
}

void save_split_manifest(const SplitManifest& manifest,
                         const std::filesystem::path& path) {
  json j;
  j["seed"] = manifest.seed;
  j["ratios"] = {manifest.ratios.train, manifest.ratios.validation, manifest.ratios.test};
  j["train"] = manifest.train;
  j["validation"] = manifest.validation;
  j["test"] = manifest.test;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write split manifest: " + path.string());
  out << j.dump(2) << '\n';
}

SplitManifest load_split_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open split manifest: " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw FormatError("split manifest is not valid JSON: " + path.string());
  for (const char* field : {"seed", "ratios", "train", "validation", "test"}) {
    if (!j.contains(field))
      throw FormatError("split manifest missing field '" + std::string(field) + "'");
  }
  SplitManifest m;
  m.seed = j["seed"].get<std::uint64_t>();
  const auto& r = j["ratios"];
  if (!r.is_array() || r.size() != 3)
    throw FormatError("split manifest ratios must be a 3-element array");
  m.ratios = {r[0].get<int>(), r[1].get<int>(), r[2].get<int>()};
  m.train = j["train"].get<std::vector<std::int64_t>>();
  m.validation = j["validation"].get<std::vector<std::int64_t>>();
  m.test = j["test"].get<std::vector<std::int64_t>>();

  std::unordered_set<std::int64_t> seen;
  for (const auto* part : {&m.train, &m.validation, &m.test}) {
    for (std::int64_t id : *part) {
      if (!seen.insert(id).second)
        throw FormatError("split manifest partitions overlap at record id " +
                          std::to_string(id));
    }
  }
  return m;
}

FrequencyReport frequency_table(const LabeledCorpus& corpus,
                                std::span<const std::int64_t> thresholds) {
  if (corpus.size() == 0) throw Error("frequency_table: empty corpus");
  std::unordered_map<std::string, std::int64_t> counts;
  std::size_t total = 0;
  for (const auto& r : corpus.records()) {
    for (const auto& t : r.tokens) {
      ++counts[t];
      ++total;
    }
  }
  FrequencyReport report;
  report.distinct_features = counts.size();
  report.total_occurrences = total;
  for (std::int64_t threshold : thresholds) {
    FrequencyRow row;
    row.threshold = threshold;
    for (const auto& [token, count] : counts) {
      if (count > threshold) ++row.features_above;
      if (count < threshold) ++row.features_below;
    }
    report.rows.push_back(row);
  }
  return report;
}

double sparsity_ratio(const LabeledCorpus& corpus) {
  if (corpus.size() == 0) throw Error("sparsity_ratio: empty corpus");
  std::unordered_set<std::string> vocab;
  std::size_t incidences = 0;
  for (const auto& r : corpus.records()) {
    std::unordered_set<std::string> seen;
    for (const auto& t : r.tokens) {
      vocab.insert(t);
      seen.insert(t);
    }
    incidences += seen.size();
  }
  if (vocab.empty()) throw Error("sparsity_ratio: empty vocabulary");
  const double dense = static_cast<double>(corpus.size()) *
                       static_cast<double>(vocab.size());
  return 1.0 - static_cast<double>(incidences) / dense;
}

}  // namespace cuisine
