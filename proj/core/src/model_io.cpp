#include "cuisine/model_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "cuisine/error.hpp"
#include "cuisine/lstm.hpp"
#include "cuisine/transformer.hpp"
#include "cuisine/version.hpp"

namespace cuisine {

namespace {

using nlohmann::json;

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump() << '\n';
  if (!out) throw IoError("write failed for " + path);
}

json matrix_to_json(const DenseMatrix& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::vector<double>(m.data(), m.data() + m.size());
  return j;
}

DenseMatrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("rows") || !j.contains("cols") ||
      !j.contains("data") || !j["data"].is_array()) {
    throw FormatError(what + ": malformed matrix");
  }
  const std::size_t rows = j["rows"].get<std::size_t>();
  const std::size_t cols = j["cols"].get<std::size_t>();
  const auto& data = j["data"];
  if (data.size() != rows * cols) {
    throw FormatError(what + ": matrix data length does not match shape");
  }
  DenseMatrix m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = data[i].get<double>();
  return m;
}

json train_config_to_json(const TrainConfig& c) {
  json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["seed"] = c.seed;
  j["max_len"] = c.max_len;
  j["embed_dim"] = c.embed_dim;
  j["hidden_dim"] = c.hidden_dim;
  j["layers"] = c.layers;
  j["n_heads"] = c.n_heads;
  j["patience"] = c.patience;
  j["clip_norm"] = c.clip_norm;
  return j;
}

TrainConfig train_config_from_json(const json& j, const std::string& what) {
  TrainConfig c;
  try {
    c.epochs = j.at("epochs").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.max_len = j.at("max_len").get<int>();
    c.embed_dim = j.at("embed_dim").get<int>();
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.layers = j.at("layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.patience = j.at("patience").get<int>();
    c.clip_norm = j.at("clip_norm").get<double>();
  } catch (const json::exception& e) {
    throw FormatError(what + ": bad train config: " + e.what());
  }
  return c;
}

json ensemble_to_json(const TreeEnsemble& model) {
  json j;
  j["kind"] = model.kind == EnsembleKind::bagging ? "bagging" : "adaboost";
  j["n_classes"] = model.n_classes;
  j["n_features"] = model.n_features;
  j["max_depth"] = model.max_depth;
  j["tree_weights"] = model.tree_weights;
  json trees = json::array();
  for (const DecisionTree& tree : model.trees) {
    json nodes = json::array();
    for (const TreeNode& node : tree.nodes) {
      json n;
      if (node.is_leaf()) {
        n["distribution"] = node.distribution;
      } else {
        n["feature"] = node.feature;
        n["threshold"] = node.threshold;
        n["left"] = node.left;
        n["right"] = node.right;
      }
      nodes.push_back(std::move(n));
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  return j;
}

TreeEnsemble ensemble_from_json(const json& j, const std::string& what) {
  TreeEnsemble model;
  try {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "bagging") {
      model.kind = EnsembleKind::bagging;
    } else if (kind == "adaboost") {
      model.kind = EnsembleKind::adaboost;
    } else {
      throw FormatError(what + ": unknown ensemble kind " + kind);
    }
    model.n_classes = j.at("n_classes").get<int>();
    model.n_features = j.at("n_features").get<std::size_t>();
    model.max_depth = j.at("max_depth").get<int>();
    model.tree_weights = j.at("tree_weights").get<std::vector<double>>();
    for (const json& t : j.at("trees")) {
      DecisionTree tree;
      for (const json& n : t.at("nodes")) {
        TreeNode node;
        if (n.contains("distribution")) {
          node.distribution = n["distribution"].get<std::vector<double>>();
        } else {
          node.feature = n.at("feature").get<std::uint32_t>();
          node.threshold = n.at("threshold").get<double>();
          node.left = n.at("left").get<int>();
          node.right = n.at("right").get<int>();
        }
        tree.nodes.push_back(std::move(node));
      }
      model.trees.push_back(std::move(tree));
    }
  } catch (const json::exception& e) {
    throw FormatError(what + ": bad ensemble payload: " + e.what());
  }
  if (model.trees.size() != model.tree_weights.size()) {
    throw FormatError(what + ": tree and weight counts differ");
  }
  return model;
}

}  // namespace

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
  json j;
  std::vector<std::string> tokens;
  std::vector<std::uint32_t> doc_freq;
  tokens.reserve(vocab.real_size());
  doc_freq.reserve(vocab.real_size());
  for (std::uint32_t id = Vocabulary::kFirstReal;
       id < static_cast<std::uint32_t>(vocab.size()); ++id) {
    tokens.push_back(vocab.token(id));
    doc_freq.push_back(vocab.doc_freq(id));
  }
  j["tokens"] = std::move(tokens);
  j["doc_freq"] = std::move(doc_freq);
  j["n_docs"] = vocab.n_docs();
  j["min_df"] = vocab.min_df();
  write_file(path, j);
}

Vocabulary load_vocabulary(const std::string& path) {
  const json j = parse_file(path);
  try {
    return Vocabulary::from_parts(j.at("tokens").get<std::vector<std::string>>(),
                                  j.at("doc_freq").get<std::vector<std::uint32_t>>(),
                                  j.at("n_docs").get<std::size_t>(),
                                  j.at("min_df").get<std::uint32_t>());
  } catch (const json::exception& e) {
    throw FormatError(path + ": bad vocabulary: " + e.what());
  }
}

int ModelBundle::n_classes() const {
  return static_cast<int>(label_names.size());
}

void save_model(const ModelBundle& bundle, const std::string& path) {
  json j;
  j["format_version"] = kModelFormatVersion;
  j["model_type"] = bundle.model_type;
  j["label_names"] = bundle.label_names;
  j["vocab_ref"] = {{"path", bundle.vocab_path},
                    {"hash", hash_hex(bundle.vocab_hash)}};
  try {
    j["config"] = json::parse(bundle.config_json);
  } catch (const json::exception& e) {
    throw FormatError("model config snapshot is not valid JSON: " +
                      std::string(e.what()));
  }

  json params;
  if (bundle.nb.has_value()) {
    params["alpha"] = bundle.nb->alpha();
    params["on_tfidf"] = bundle.nb_on_tfidf;
    params["log_prior"] = std::vector<double>(bundle.nb->log_prior().begin(),
                                              bundle.nb->log_prior().end());
    params["log_likelihood"] = matrix_to_json(bundle.nb->log_likelihood());
  } else if (bundle.linear.has_value()) {
    params["scheme"] = to_string(bundle.linear->kind());
    params["beta"] = matrix_to_json(bundle.linear->beta());
  } else if (bundle.ensemble.has_value()) {
    params = ensemble_to_json(*bundle.ensemble);
  } else if (bundle.sequence != nullptr) {
    SequenceClassifier& model = *bundle.sequence;
    params["train_config"] = train_config_to_json(model.config());
    params["n_classes"] = model.n_classes();
    json tensors;
    for (const TensorRef& t : model.tensors()) {
      tensors[t.name] = matrix_to_json(*t.value);
    }
    params["tensors"] = std::move(tensors);
    if (model.kind() == "lstm") {
      params["vocab_size"] = static_cast<LstmModel&>(model).vocab_size();
    } else {
      params["vocab_size"] = static_cast<TransformerModel&>(model).vocab_size();
    }
  } else {
    throw Error("model bundle has no engine to save");
  }
  j["params"] = std::move(params);
  write_file(path, j);
}

ModelBundle load_model(const std::string& path) {
  const json j = parse_file(path);
  ModelBundle bundle;
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw FormatError(path + ": unsupported format_version " +
                        std::to_string(version));
    }
    bundle.model_type = j.at("model_type").get<std::string>();
    bundle.label_names = j.at("label_names").get<std::vector<std::string>>();
    if (bundle.label_names.empty()) {
      throw FormatError(path + ": empty label_names");
    }
    const json& ref = j.at("vocab_ref");
    bundle.vocab_path = ref.at("path").get<std::string>();
    bundle.vocab_hash =
        std::stoull(ref.at("hash").get<std::string>(), nullptr, 16);
    bundle.config_json = j.at("config").dump();

    const json& params = j.at("params");
    const std::string& type = bundle.model_type;
    if (type == "nb") {
      bundle.nb = NaiveBayes::from_params(
          params.at("log_prior").get<std::vector<double>>(),
          matrix_from_json(params.at("log_likelihood"), path),
          params.at("alpha").get<double>());
      bundle.nb_on_tfidf = params.value("on_tfidf", false);
    } else if (type == "logreg" || type == "svm") {
      bundle.linear = LinearModel::from_params(
          parse_linear_kind(params.at("scheme").get<std::string>()),
          matrix_from_json(params.at("beta"), path));
    } else if (type == "rf" || type == "adaboost") {
      bundle.ensemble = ensemble_from_json(params, path);
    } else if (type == "lstm" || type == "transformer") {
      const TrainConfig config =
          train_config_from_json(params.at("train_config"), path);
      const std::size_t vocab_size = params.at("vocab_size").get<std::size_t>();
      const int n_classes = params.at("n_classes").get<int>();
      if (type == "lstm") {
        bundle.sequence =
            std::make_unique<LstmModel>(vocab_size, n_classes, config);
      } else {
        bundle.sequence =
            std::make_unique<TransformerModel>(vocab_size, n_classes, config);
      }
      const json& tensors = params.at("tensors");
      for (const TensorRef& t : bundle.sequence->tensors()) {
        if (!tensors.contains(t.name)) {
          throw FormatError(path + ": missing tensor " + t.name);
        }
        DenseMatrix loaded = matrix_from_json(tensors[t.name], path + ":" + t.name);
        if (loaded.rows() != t.value->rows() || loaded.cols() != t.value->cols()) {
          throw FormatError(path + ": tensor " + t.name + " has wrong shape");
        }
        *t.value = std::move(loaded);
      }
    } else {
      throw FormatError(path + ": unknown model_type " + type);
    }
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  } catch (const std::invalid_argument&) {
    throw FormatError(path + ": malformed vocab hash");
  } catch (const std::out_of_range&) {
    throw FormatError(path + ": malformed vocab hash");
  }
  return bundle;
}

std::string hash_hex(std::uint64_t hash) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << hash;
  return out.str();
}

}  // namespace cuisine
