#include "cuisine/experiment.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cuisine/error.hpp"

namespace cuisine {

using json = nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw ConfigError("config: bad value '" + value + "' for " + key);
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long n = std::stoll(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return n;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::uint64_t n = std::stoull(value, &pos);
    if (pos != value.size() || value.front() == '-') bad_value(key, value);
    return n;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(value, &pos);
    if (pos != value.size()) bad_value(key, value);
    return x;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value);
}

SplitRatios parse_ratios(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  int parts[3];
  char sep1 = 0;
  char sep2 = 0;
  if (!(in >> parts[0] >> sep1 >> parts[1] >> sep2 >> parts[2]) ||
      sep1 != ':' || sep2 != ':' || in.peek() != EOF) {
    bad_value(key, value);
  }
  return {parts[0], parts[1], parts[2]};
}

bool set_linear_key(LinearTrainConfig& c, const std::string& key,
                    const std::string& value, const std::string& full) {
  if (key == "epochs") c.epochs = static_cast<int>(parse_int(full, value));
  else if (key == "batch_size") c.batch_size = static_cast<int>(parse_int(full, value));
  else if (key == "learning_rate") c.learning_rate = parse_double(full, value);
  else if (key == "lr_decay") c.lr_decay = parse_double(full, value);
  else if (key == "l2") c.l2 = parse_double(full, value);
  else if (key == "shuffle") c.shuffle = parse_bool(full, value);
  else return false;
  return true;
}

bool set_seq_key(TrainConfig& c, const std::string& key,
                 const std::string& value, const std::string& full) {
  if (key == "epochs") c.epochs = static_cast<int>(parse_int(full, value));
  else if (key == "batch_size") c.batch_size = static_cast<int>(parse_int(full, value));
  else if (key == "learning_rate") c.learning_rate = parse_double(full, value);
  else if (key == "embed_dim") c.embed_dim = static_cast<int>(parse_int(full, value));
  else if (key == "hidden_dim") c.hidden_dim = static_cast<int>(parse_int(full, value));
  else if (key == "layers") c.layers = static_cast<int>(parse_int(full, value));
  else if (key == "patience") c.patience = static_cast<int>(parse_int(full, value));
  else if (key == "clip_norm") c.clip_norm = parse_double(full, value);
  else return false;
  return true;
}

void set_key(ExperimentConfig& config, const std::string& section,
             const std::string& key, const std::string& value) {
  const std::string full = section + "." + key;
  auto unknown = [&] {
    throw ConfigError("config: unknown key '" + full + "'");
  };

  if (section == "data") {
    if (key == "path") config.data_path = value;
    else if (key == "format") config.data_format = parse_corpus_format(value);
    else unknown();
  } else if (section == "preprocess") {
    if (key == "lowercase") config.cleaning.lowercase = parse_bool(full, value);
    else if (key == "lemmatize") config.cleaning.lemmatize = parse_bool(full, value);
    else if (key == "lemma_exceptions") config.cleaning.lemma_exceptions = value;
    else unknown();
  } else if (section == "features") {
    if (key == "min_df") config.min_df = static_cast<std::uint32_t>(parse_u64(full, value));
    else if (key == "max_len") config.max_len = static_cast<int>(parse_int(full, value));
    else unknown();
  } else if (section == "split") {
    if (key == "seed") config.seed = parse_u64(full, value);
    else if (key == "ratios") config.ratios = parse_ratios(full, value);
    else if (key == "stratified") config.stratified = parse_bool(full, value);
    else unknown();
  } else if (section == "model") {
    if (key == "kind") config.model_kind = value;
    else unknown();
  } else if (section == "nb") {
    if (key == "alpha") config.models.nb_alpha = parse_double(full, value);
    else if (key == "on_tfidf") config.models.nb_on_tfidf = parse_bool(full, value);
    else unknown();
  } else if (section == "logreg") {
    if (key == "scheme") {
      const LinearKind kind = parse_linear_kind(value);
      if (kind == LinearKind::svm_ovr) bad_value(full, value);
      config.models.logreg_scheme = kind;
    } else if (!set_linear_key(config.models.logreg, key, value, full)) {
      unknown();
    }
  } else if (section == "svm") {
    if (!set_linear_key(config.models.svm, key, value, full)) unknown();
  } else if (section == "rf") {
    if (key == "n_trees") config.models.rf.n_trees = static_cast<int>(parse_int(full, value));
    else if (key == "max_depth") config.models.rf.max_depth = static_cast<int>(parse_int(full, value));
    else if (key == "feature_subsample") config.models.rf.feature_subsample = static_cast<std::size_t>(parse_u64(full, value));
    else unknown();
  } else if (section == "adaboost") {
    if (key == "n_rounds") config.models.adaboost.n_rounds = static_cast<int>(parse_int(full, value));
    else if (key == "base_depth") config.models.adaboost.base_depth = static_cast<int>(parse_int(full, value));
    else if (key == "retry_budget") config.models.adaboost.retry_budget = static_cast<int>(parse_int(full, value));
    else unknown();
  } else if (section == "lstm") {
    if (!set_seq_key(config.models.lstm, key, value, full)) unknown();
  } else if (section == "transformer") {
    if (key == "n_heads") config.models.transformer.n_heads = static_cast<int>(parse_int(full, value));
    else if (!set_seq_key(config.models.transformer, key, value, full)) unknown();
  } else if (section == "output") {
    if (key == "dir") config.output_dir = value;
    else unknown();
  } else {
    throw ConfigError("config: unknown section '" + section + "'");
  }
}

std::string ratios_to_string(const SplitRatios& r) {
  return std::to_string(r.train) + ":" + std::to_string(r.validation) + ":" +
         std::to_string(r.test);
}

std::string scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path.string());
  ExperimentConfig config;
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw ConfigError("config: malformed section header at line " +
                          std::to_string(line_no));
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: expected key = value at line " +
                        std::to_string(line_no));
    }
    if (section.empty()) {
      throw ConfigError("config: key before any [section] at line " +
                        std::to_string(line_no));
    }
    set_key(config, section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return config;
}

void apply_override(ExperimentConfig& config, const std::string& dotted_key,
                    const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size()) {
    throw ConfigError("config: override key must look like section.key, got '" +
                      dotted_key + "'");
  }
  set_key(config, dotted_key.substr(0, dot), dotted_key.substr(dot + 1), value);
}

ModelHyperparams resolved_hyperparams(const ExperimentConfig& config) {
  ModelHyperparams hp = config.models;
  hp.logreg.seed = config.seed;
  hp.svm.seed = config.seed;
  hp.rf.seed = config.seed;
  hp.adaboost.seed = config.seed;
  hp.lstm.seed = config.seed;
  hp.transformer.seed = config.seed;
  hp.lstm.max_len = config.max_len;
  hp.transformer.max_len = config.max_len;
  return hp;
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
  const ModelHyperparams& m = config.models;
  json j;
  j["data"] = {{"path", config.data_path.string()},
               {"format", config.data_format == CorpusFormat::jsonl ? "jsonl" : "csv"}};
  j["preprocess"] = {{"lowercase", config.cleaning.lowercase},
                     {"lemmatize", config.cleaning.lemmatize},
                     {"lemma_exceptions", config.cleaning.lemma_exceptions.string()}};
  j["features"] = {{"min_df", config.min_df}, {"max_len", config.max_len}};
  j["split"] = {{"seed", config.seed},
                {"ratios", ratios_to_string(config.ratios)},
                {"stratified", config.stratified}};
  j["model"] = {{"kind", config.model_kind}};
  j["nb"] = {{"alpha", m.nb_alpha}, {"on_tfidf", m.nb_on_tfidf}};
  auto linear_json = [](const LinearTrainConfig& c) {
    return json{{"epochs", c.epochs},          {"batch_size", c.batch_size},
                {"learning_rate", c.learning_rate}, {"lr_decay", c.lr_decay},
                {"l2", c.l2},                  {"shuffle", c.shuffle}};
  };
  j["logreg"] = linear_json(m.logreg);
  j["logreg"]["scheme"] = to_string(m.logreg_scheme);
  j["svm"] = linear_json(m.svm);
  j["rf"] = {{"n_trees", m.rf.n_trees},
             {"max_depth", m.rf.max_depth},
             {"feature_subsample", m.rf.feature_subsample}};
  j["adaboost"] = {{"n_rounds", m.adaboost.n_rounds},
                   {"base_depth", m.adaboost.base_depth},
                   {"retry_budget", m.adaboost.retry_budget}};
  auto seq_json = [](const TrainConfig& c) {
    return json{{"epochs", c.epochs},          {"batch_size", c.batch_size},
                {"learning_rate", c.learning_rate}, {"embed_dim", c.embed_dim},
                {"hidden_dim", c.hidden_dim},  {"layers", c.layers},
                {"patience", c.patience},      {"clip_norm", c.clip_norm}};
  };
  j["lstm"] = seq_json(m.lstm);
  j["transformer"] = seq_json(m.transformer);
  j["transformer"]["n_heads"] = m.transformer.n_heads;
  j["output"] = {{"dir", config.output_dir.string()}};
  return j.dump(2);
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw FormatError("config snapshot is not valid JSON");
  }
  ExperimentConfig config;
  for (const auto& [section, keys] : j.items()) {
    if (!keys.is_object()) {
      throw FormatError("config snapshot: section '" + section +
                        "' is not an object");
    }
    for (const auto& [key, value] : keys.items()) {
      set_key(config, section, key, scalar_to_string(value));
    }
  }
  return config;
}

void save_run_manifest(const RunManifest& manifest,
                       const std::filesystem::path& path) {
  json j;
  try {
    j["config"] = json::parse(manifest.config_json);
  } catch (const json::exception& e) {
    throw FormatError("run manifest config snapshot is not valid JSON: " +
                      std::string(e.what()));
  }
  j["seconds_total"] = manifest.seconds_total;
  j["seconds_fit"] = manifest.seconds_fit;
  j["n_records"] = manifest.n_records;
  j["vocab_size"] = manifest.vocab_size;
  j["n_classes"] = manifest.n_classes;
  j["sparsity"] = manifest.sparsity;
  j["outputs"] = manifest.outputs;
  j["tool_version"] = manifest.tool_version;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write run manifest: " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace cuisine
