#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cuisine/corpus.hpp"
#include "cuisine/error.hpp"
#include "cuisine/experiment.hpp"
#include "cuisine/features.hpp"
#include "cuisine/grad_check.hpp"
#include "cuisine/lstm.hpp"
#include "cuisine/metrics.hpp"
#include "cuisine/model_io.hpp"
#include "cuisine/numeric.hpp"
#include "cuisine/pipeline.hpp"
#include "cuisine/preprocess.hpp"
#include "cuisine/prng.hpp"
#include "cuisine/transformer.hpp"
#include "cuisine/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cuisine;

namespace {

/// CUISINE_DETERMINISTIC=0 permits internal parallelism; anything else
/// (including unset) keeps every stage sequential.
bool deterministic_mode() {
  const char* v = std::getenv("CUISINE_DETERMINISTIC");
  return v == nullptr || std::string(v) != "0";
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
};

void add_common(CLI::App* sub, CommonOpts& opts) {
  sub->add_option("-c,--config", opts.config_path,
                  "Experiment config file (INI sections)");
  sub->add_option("--set", opts.overrides,
                  "Override one config value, as section.key=value")
      ->type_name("KEY=VALUE");
  sub->add_option("-o,--out-dir", opts.out_dir,
                  "Output directory (overrides [output] dir)");
}

ExperimentConfig resolve_config(const CommonOpts& opts) {
  ExperimentConfig config;
  if (!opts.config_path.empty()) {
    config = load_experiment_config(opts.config_path);
  }
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects section.key=value, got '" + kv + "'");
    }
    apply_override(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
  return config;
}

LabeledCorpus load_and_preprocess(const ExperimentConfig& config) {
  if (config.data_path.empty()) {
    throw ConfigError("no dataset: set data.path in the config or via --set");
  }
  LoadResult loaded = load_corpus(config.data_path, config.data_format);
  for (const std::string& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
  PreprocessResult prep = preprocess_corpus(loaded.corpus, config.cleaning);
  for (const std::string& w : prep.warnings) std::cerr << "warning: " << w << '\n';
  return std::move(prep.corpus);
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

/// Same token cleaning as corpus preprocessing, for one ad-hoc record.
std::vector<std::string> clean_tokens(const std::vector<std::string>& raw,
                                      const CleaningConfig& config,
                                      const Lemmatizer& lemmatizer) {
  std::vector<std::string> tokens;
  tokens.reserve(raw.size());
  for (const std::string& r : raw) {
    auto cleaned = clean_token(r, config);
    if (!cleaned) continue;
    tokens.push_back(config.lemmatize ? lemmatizer.lemma(*cleaned)
                                      : std::move(*cleaned));
  }
  return tokens;
}

Vocabulary load_vocab_checked(const ModelBundle& bundle,
                              const fs::path& model_path) {
  fs::path vocab_path = bundle.vocab_path;
  if (vocab_path.is_relative()) {
    vocab_path = model_path.parent_path() / vocab_path;
  }
  Vocabulary vocab = load_vocabulary(vocab_path.string());
  if (vocab.hash() != bundle.vocab_hash) {
    throw Error("vocabulary mismatch: model expects hash " +
                hash_hex(bundle.vocab_hash) + " but " + vocab_path.string() +
                " has hash " + hash_hex(vocab.hash()));
  }
  return vocab;
}

ExperimentConfig config_from_bundle(const ModelBundle& bundle,
                                    const CommonOpts& opts) {
  ExperimentConfig config;
  if (!opts.config_path.empty()) {
    config = load_experiment_config(opts.config_path);
  } else {
    config = experiment_config_from_json(bundle.config_json);
  }
  for (const std::string& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("--set expects section.key=value, got '" + kv + "'");
    }
    apply_override(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!opts.out_dir.empty()) config.output_dir = opts.out_dir;
  return config;
}

json history_to_json(const TrainHistory& history) {
  json epochs = json::array();
  for (const EpochStats& e : history.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_accuracy", e.train_accuracy},
                      {"val_loss", e.val_loss},
                      {"val_accuracy", e.val_accuracy}});
  }
  return {{"epochs", std::move(epochs)},
          {"best_epoch", history.best_epoch},
          {"stopped_early", history.stopped_early}};
}

void print_history(const TrainHistory& history) {
  for (const EpochStats& e : history.epochs) {
    std::cout << "epoch " << e.epoch << "  train_loss=" << e.train_loss
              << " train_acc=" << e.train_accuracy
              << "  val_loss=" << e.val_loss << " val_acc=" << e.val_accuracy
              << '\n';
  }
  if (history.best_epoch >= 0) {
    std::cout << "best epoch " << history.best_epoch
              << (history.stopped_early ? " (stopped early)" : "") << '\n';
  }
}

struct PartitionSet {
  DataSplit split;
  SplitManifest manifest;
};

/// Uses the manifest when given, otherwise splits per config.
PartitionSet obtain_split(const LabeledCorpus& corpus,
                          const ExperimentConfig& config,
                          const std::string& manifest_path) {
  PartitionSet ps;
  if (!manifest_path.empty()) {
    ps.manifest = load_split_manifest(manifest_path);
    ps.split = resolve_split(ps.manifest, corpus);
  } else {
    SplitOptions options{config.ratios, config.seed, config.stratified};
    std::vector<std::string> warnings;
    ps.split = split(corpus, options, &warnings);
    for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
    ps.manifest = make_split_manifest(corpus, ps.split, config.seed, config.ratios);
  }
  return ps;
}

// ---------------------------------------------------------------------------
// split

int cmd_split(const CommonOpts& opts) {
  const ExperimentConfig config = resolve_config(opts);
  const LabeledCorpus corpus = load_and_preprocess(config);
  const PartitionSet ps = obtain_split(corpus, config, "");

  fs::create_directories(config.output_dir);
  const fs::path manifest_path = config.output_dir / "split.json";
  save_split_manifest(ps.manifest, manifest_path);
  const fs::path config_path = config.output_dir / "split.config.json";
  write_text_file(config_path, experiment_config_to_json(config) + "\n");

  std::cout << "train=" << ps.split.train.size()
            << " val=" << ps.split.validation.size()
            << " test=" << ps.split.test.size() << '\n';
  std::cout << "wrote " << manifest_path.string() << '\n';
  std::cout << "wrote " << config_path.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const CommonOpts& opts, const std::string& split_path) {
  const auto t_start = std::chrono::steady_clock::now();
  const ExperimentConfig config = resolve_config(opts);
  const LabeledCorpus corpus = load_and_preprocess(config);
  const PartitionSet ps = obtain_split(corpus, config, split_path);

  const LabeledCorpus train_c = subset(corpus, ps.split.train);
  const LabeledCorpus val_c = subset(corpus, ps.split.validation);
  const Vocabulary vocab = Vocabulary::build(train_c.records(), config.min_df);

  fs::create_directories(config.output_dir);
  RunManifest rm;
  rm.config_json = experiment_config_to_json(config);
  rm.n_records = corpus.size();
  rm.vocab_size = vocab.real_size();
  rm.n_classes = corpus.num_classes();
  rm.sparsity = sparsity_ratio(corpus);
  rm.tool_version = kVersion;

  const fs::path vocab_path = config.output_dir / "vocab.json";
  save_vocabulary(vocab, vocab_path.string());
  rm.outputs.push_back(vocab_path.string());

  if (split_path.empty()) {
    const fs::path manifest_path = config.output_dir / "split.json";
    save_split_manifest(ps.manifest, manifest_path);
    rm.outputs.push_back(manifest_path.string());
  }

  std::cout << "model=" << config.model_kind << " train=" << train_c.size()
            << " val=" << val_c.size() << " test=" << ps.split.test.size()
            << " vocab=" << vocab.real_size() << '\n';

  const auto t_fit = std::chrono::steady_clock::now();
  FitResult fit = fit_model(config.model_kind, train_c, val_c, vocab,
                            resolved_hyperparams(config), "vocab.json");
  rm.seconds_fit = seconds_since(t_fit);
  fit.bundle.config_json = rm.config_json;

  const fs::path model_path = config.output_dir / "model.json";
  save_model(fit.bundle, model_path.string());
  rm.outputs.push_back(model_path.string());

  if (fit.history.has_value()) {
    print_history(*fit.history);
    const fs::path history_path = config.output_dir / "history.json";
    write_text_file(history_path, history_to_json(*fit.history).dump(2) + "\n");
    rm.outputs.push_back(history_path.string());
  }

  rm.seconds_total = seconds_since(t_start);
  save_run_manifest(rm, config.output_dir / "run_manifest.json");

  std::cout << "wrote " << model_path.string() << '\n';
  std::cout << "fit " << rm.seconds_fit << " s, total " << rm.seconds_total
            << " s\n";
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

const std::vector<std::size_t>& partition_of(const DataSplit& split,
                                             const std::string& which) {
  if (which == "train") return split.train;
  if (which == "validation") return split.validation;
  if (which == "test") return split.test;
  throw ConfigError("unknown partition '" + which +
                    "'; expected train, validation or test");
}

int cmd_evaluate(const CommonOpts& opts, const std::string& model_path,
                 const std::string& split_path, const std::string& which) {
  ModelBundle bundle = load_model(model_path);
  const ExperimentConfig config = config_from_bundle(bundle, opts);
  const Vocabulary vocab = load_vocab_checked(bundle, model_path);

  const LabeledCorpus corpus = load_and_preprocess(config);
  const SplitManifest manifest = load_split_manifest(split_path);
  const DataSplit split = resolve_split(manifest, corpus);
  const LabeledCorpus part = subset(corpus, partition_of(split, which));
  if (part.size() == 0) throw Error("partition '" + which + "' is empty");

  const EvaluationOutput out = evaluate_model(bundle, vocab, part);
  const std::string table =
      render_metrics_table({bundle.model_type}, {out.report});
  std::cout << "partition=" << which << " n=" << part.size() << '\n' << table;

  fs::create_directories(config.output_dir);
  json report;
  report["config"] = json::parse(experiment_config_to_json(config));
  report["model"] = model_path;
  report["partition"] = which;
  report["metrics"] = json::parse(metrics_report_to_json(out.report, bundle.label_names));
  const fs::path json_path = config.output_dir / ("report-" + which + ".json");
  const fs::path text_path = config.output_dir / ("report-" + which + ".txt");
  write_text_file(json_path, report.dump(2) + "\n");
  write_text_file(text_path, table);
  std::cout << "wrote " << json_path.string() << '\n';
  std::cout << "wrote " << text_path.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// predict

int cmd_predict(const CommonOpts& opts, const std::string& model_path,
                const std::string& input_path, const std::string& output_path) {
  ModelBundle bundle = load_model(model_path);
  const ExperimentConfig config = config_from_bundle(bundle, opts);
  const Vocabulary vocab = load_vocab_checked(bundle, model_path);

  Lemmatizer lemmatizer;
  if (!config.cleaning.lemma_exceptions.empty()) {
    lemmatizer.load_exceptions(config.cleaning.lemma_exceptions);
  }

  std::ifstream file_in;
  if (input_path != "-") {
    file_in.open(input_path);
    if (!file_in) throw IoError("cannot open input: " + input_path);
  }
  std::istream& in = input_path == "-" ? std::cin : file_in;

  std::ofstream file_out;
  if (output_path != "-") {
    file_out.open(output_path);
    if (!file_out) throw IoError("cannot write output: " + output_path);
  }
  std::ostream& out = output_path == "-" ? std::cout : file_out;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json result;
    try {
      const json row = json::parse(line);
      if (!row.is_object() || !row.contains("id") || !row.contains("tokens")) {
        throw FormatError("expected an object with 'id' and 'tokens'");
      }
      RecipeRecord record;
      record.id = row.at("id").get<std::int64_t>();
      record.tokens = row.at("tokens").get<std::vector<std::string>>();
      record.tokens = clean_tokens(record.tokens, config.cleaning, lemmatizer);
      const Prediction p = predict_record(bundle, vocab, record);
      result["id"] = record.id;
      result["cuisine"] = p.label;
      result["scores"] = p.scores;
    } catch (const json::exception& e) {
      result = {{"line", line_no}, {"error", std::string("bad JSON: ") + e.what()}};
    } catch (const Error& e) {
      result = {{"line", line_no}, {"error", std::string(e.what())}};
    }
    out << result.dump() << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

int cmd_analyze(const CommonOpts& opts, const std::string& report_path) {
  const ExperimentConfig config = resolve_config(opts);
  if (config.data_path.empty()) {
    throw ConfigError("no dataset: set data.path in the config or via --set");
  }
  LoadResult loaded = load_corpus(config.data_path, config.data_format);
  for (const std::string& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
  const LabeledCorpus& raw = loaded.corpus;

  std::vector<std::pair<std::string, std::size_t>> counts;
  for (const std::string& name : raw.labels()) counts.emplace_back(name, 0);
  for (std::size_t i = 0; i < raw.size(); ++i) ++counts[raw.label_of(i)].second;
  std::sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  PreprocessResult prep = preprocess_corpus(raw, config.cleaning);
  for (const std::string& w : prep.warnings) std::cerr << "warning: " << w << '\n';
  const LabeledCorpus& processed = prep.corpus;

  const std::vector<std::int64_t> gt = {1000,  5000,  10000, 15000, 20000,
                                        25000, 30000, 35000, 40000, 45000};
  const std::vector<std::int64_t> lt = {2, 3, 4, 5, 6, 7, 8, 10, 15, 20};
  const FrequencyReport above = frequency_table(processed, gt);
  const FrequencyReport below = frequency_table(processed, lt);
  const double sparsity = sparsity_ratio(processed);

  std::ostringstream text;
  text << "records=" << raw.size() << " cuisines=" << raw.num_classes() << '\n';
  text << "per-cuisine record counts:\n";
  for (const auto& [name, n] : counts) text << "  " << name << "  " << n << '\n';
  text << "feature frequency distribution:\n";
  for (std::size_t i = 0; i < gt.size(); ++i) {
    text << "  count > " << gt[i] << ": " << above.rows[i].features_above
         << "    count < " << lt[i] << ": " << below.rows[i].features_below
         << '\n';
  }
  text << "distinct features=" << above.distinct_features
       << " total occurrences=" << above.total_occurrences << '\n';
  text << "sparsity=" << sparsity << '\n';
  std::cout << text.str();

  if (!report_path.empty()) {
    json j;
    j["records"] = raw.size();
    j["cuisines"] = raw.num_classes();
    json per_cuisine = json::object();
    for (const auto& [name, n] : counts) per_cuisine[name] = n;
    j["per_cuisine"] = std::move(per_cuisine);
    json freq = json::array();
    for (std::size_t i = 0; i < gt.size(); ++i) {
      freq.push_back({{"gt_threshold", gt[i]},
                      {"gt_count", above.rows[i].features_above},
                      {"lt_threshold", lt[i]},
                      {"lt_count", below.rows[i].features_below}});
    }
    j["frequency"] = std::move(freq);
    j["distinct_features"] = above.distinct_features;
    j["total_occurrences"] = above.total_occurrences;
    j["sparsity"] = sparsity;
    j["config"] = json::parse(experiment_config_to_json(config));
    write_text_file(report_path, j.dump(2) + "\n");
    std::cout << "wrote " << report_path << '\n';
  }
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradCheckCli {
  std::string kind;
  int docs = 6;
  int vocab = 12;
  int classes = 3;
  int embed_dim = 6;
  int hidden_dim = 8;
  int layers = 2;
  int n_heads = 2;
  int max_len = 8;
  double eps = 0.0;        // 0 picks the per-kind default
  double threshold = 0.0;  // 0 picks the per-kind default
  std::size_t samples = 0;
  bool corrupt = false;
};

int cmd_gradcheck(const CommonOpts& opts, const GradCheckCli& cli) {
  const ExperimentConfig config = resolve_config(opts);
  const int k = cli.classes;
  Prng rng(config.seed);

  std::vector<TensorRef> tensors;
  std::function<double()> loss_fn;
  std::function<void()> backward_fn;
  double threshold = cli.threshold;

  // Owners for whichever branch is taken.
  std::unique_ptr<SequenceClassifier> seq;
  std::optional<LinearModel> linear;
  DenseMatrix linear_grad;
  std::vector<TokenSequence> seqs;
  std::vector<SparseVector> docs;
  std::vector<int> labels;

  double eps = cli.eps;
  if (cli.kind == "lstm" || cli.kind == "transformer") {
    if (threshold == 0.0) threshold = 1e-4;
    if (eps == 0.0) eps = 1e-4;
    TrainConfig tc;
    tc.seed = config.seed;
    tc.max_len = cli.max_len;
    tc.embed_dim = cli.embed_dim;
    tc.hidden_dim = cli.hidden_dim;
    tc.layers = cli.layers;
    tc.n_heads = cli.n_heads;
    const std::size_t vocab_size = Vocabulary::kFirstReal + cli.vocab;
    if (cli.kind == "lstm") {
      seq = std::make_unique<LstmModel>(vocab_size, k, tc);
    } else {
      seq = std::make_unique<TransformerModel>(vocab_size, k, tc);
    }
    for (int i = 0; i < cli.docs; ++i) {
      TokenSequence s;
      const std::size_t len = 2 + rng.below(cli.max_len - 2);
      for (std::size_t t = 0; t < len; ++t) {
        s.ids.push_back(static_cast<std::uint32_t>(
            Vocabulary::kFirstReal + rng.below(cli.vocab)));
      }
      s.true_length = s.ids.size();
      seqs.push_back(std::move(s));
      labels.push_back(static_cast<int>(rng.below(k)));
    }
    tensors = seq->tensors();
    // The probe needs an O(1) operating point; at the tiny fresh-init
    // scale layer normalization is near-singular and finite differences
    // cannot resolve the gradient at any step size.
    for (const TensorRef& t : tensors) {
      for (std::size_t i = 0; i < t.value->size(); ++i) {
        t.value->data()[i] += rng.normal(0.0, 0.3);
      }
    }
    loss_fn = [&] {
      double total = 0.0;
      for (std::size_t i = 0; i < seqs.size(); ++i) {
        const std::vector<double> p = softmax(seq->forward(seqs[i]));
        total += cross_entropy(p, labels[i]);
      }
      return total / static_cast<double>(seqs.size());
    };
    backward_fn = [&] {
      seq->zero_grads();
      const double inv_n = 1.0 / static_cast<double>(seqs.size());
      for (std::size_t i = 0; i < seqs.size(); ++i) {
        std::vector<double> d = softmax(seq->forward(seqs[i]));
        d[labels[i]] -= 1.0;
        for (double& v : d) v *= inv_n;
        seq->backward(d);
      }
    };
  } else if (cli.kind == "logreg" || cli.kind == "svm") {
    if (threshold == 0.0) threshold = 1e-6;
    if (eps == 0.0) eps = 1e-4;
    const LinearKind scheme = cli.kind == "svm"
                                  ? LinearKind::svm_ovr
                                  : config.models.logreg_scheme;
    linear.emplace(scheme, k, static_cast<std::size_t>(cli.vocab));
    for (double& v :
         std::span<double>(linear->beta().data(), linear->beta().size())) {
      v = rng.normal(0.0, 0.5);
    }
    for (int i = 0; i < cli.docs; ++i) {
      SparseVector x;
      const std::size_t nnz = 1 + rng.below(3);
      std::vector<std::uint32_t> idx;
      for (std::size_t j = 0; j < nnz; ++j) {
        idx.push_back(static_cast<std::uint32_t>(Vocabulary::kFirstReal +
                                                 rng.below(cli.vocab)));
      }
      std::sort(idx.begin(), idx.end());
      idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
      for (std::uint32_t id : idx) {
        x.entries.push_back({id, rng.uniform(0.1, 1.0)});
      }
      docs.push_back(std::move(x));
      labels.push_back(static_cast<int>(rng.below(k)));
    }
    const double l2 =
        cli.kind == "svm" ? config.models.svm.l2 : config.models.logreg.l2;
    linear_grad = DenseMatrix(linear->beta().rows(), linear->beta().cols());
    tensors.push_back({"beta", &linear->beta(), &linear_grad});
    loss_fn = [&, l2] { return linear->objective(docs, labels, l2, nullptr); };
    backward_fn = [&, l2] { linear->objective(docs, labels, l2, &linear_grad); };
  } else {
    throw ConfigError("gradcheck supports lstm, transformer, logreg or svm; got '" +
                      cli.kind + "'");
  }

  std::size_t param_count = 0;
  for (const TensorRef& t : tensors) param_count += t.value->size();
  if (param_count > 50000) {
    throw ConfigError("gradcheck configuration has " +
                      std::to_string(param_count) +
                      " parameters; the limit is 50000");
  }

  std::function<void()> backward = backward_fn;
  if (cli.corrupt) {
    backward = [backward_fn, &tensors] {
      backward_fn();
      tensors.front().grad->data()[0] += 1.0;
    };
  }

  GradCheckOptions gopts;
  gopts.eps = eps;
  gopts.max_samples_per_tensor = cli.samples;
  gopts.seed = config.seed;
  const GradCheckReport report = grad_check(tensors, loss_fn, backward, gopts);

  for (const TensorCheckResult& t : report.tensors) {
    std::cout << "tensor " << t.name << "  checked=" << t.checked
              << "  max_rel_error=" << t.max_rel_error << '\n';
  }
  const bool pass = report.max_rel_error < threshold;
  std::cout << "gradcheck " << cli.kind << ": params=" << param_count
            << " max_rel_error=" << report.max_rel_error << " (worst "
            << report.worst_tensor << ") threshold=" << threshold << " "
            << (pass ? "PASS" : "FAIL") << '\n';
  return pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// compare

int cmd_compare(const CommonOpts& opts, const std::string& split_path) {
  const auto t_start = std::chrono::steady_clock::now();
  const ExperimentConfig config = resolve_config(opts);
  const LabeledCorpus corpus = load_and_preprocess(config);
  const PartitionSet ps = obtain_split(corpus, config, split_path);

  const LabeledCorpus train_c = subset(corpus, ps.split.train);
  const LabeledCorpus val_c = subset(corpus, ps.split.validation);
  const LabeledCorpus test_c = subset(corpus, ps.split.test);
  const Vocabulary vocab = Vocabulary::build(train_c.records(), config.min_df);

  fs::create_directories(config.output_dir);
  RunManifest rm;
  rm.config_json = experiment_config_to_json(config);
  rm.n_records = corpus.size();
  rm.vocab_size = vocab.real_size();
  rm.n_classes = corpus.num_classes();
  rm.sparsity = sparsity_ratio(corpus);
  rm.tool_version = kVersion;

  const fs::path vocab_path = config.output_dir / "vocab.json";
  save_vocabulary(vocab, vocab_path.string());
  rm.outputs.push_back(vocab_path.string());
  if (split_path.empty()) {
    const fs::path manifest_path = config.output_dir / "split.json";
    save_split_manifest(ps.manifest, manifest_path);
    rm.outputs.push_back(manifest_path.string());
  }

  const std::vector<std::string>& kinds = model_kinds();
  const Prng master(config.seed);

  struct OneRun {
    ModelBundle bundle;
    MetricsReport report;
    double seconds = 0.0;
  };
  auto run_one = [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    ModelHyperparams hp = resolved_hyperparams(config);
    const std::uint64_t seed = master.derive(i).seed();
    hp.logreg.seed = seed;
    hp.svm.seed = seed;
    hp.rf.seed = seed;
    hp.adaboost.seed = seed;
    hp.lstm.seed = seed;
    hp.transformer.seed = seed;
    FitResult fit =
        fit_model(kinds[i], train_c, val_c, vocab, hp, "vocab.json");
    fit.bundle.config_json = rm.config_json;
    OneRun run;
    run.report = evaluate_model(fit.bundle, vocab, test_c).report;
    run.bundle = std::move(fit.bundle);
    run.seconds = seconds_since(t0);
    return run;
  };

  std::vector<OneRun> runs(kinds.size());
  if (deterministic_mode()) {
    for (std::size_t i = 0; i < kinds.size(); ++i) runs[i] = run_one(i);
  } else {
    std::vector<std::future<OneRun>> futures;
    futures.reserve(kinds.size());
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      futures.push_back(std::async(std::launch::async, run_one, i));
    }
    for (std::size_t i = 0; i < kinds.size(); ++i) runs[i] = futures[i].get();
  }

  std::vector<MetricsReport> reports;
  json per_model = json::object();
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const fs::path model_path =
        config.output_dir / ("model-" + kinds[i] + ".json");
    save_model(runs[i].bundle, model_path.string());
    rm.outputs.push_back(model_path.string());
    reports.push_back(runs[i].report);
    per_model[kinds[i]] = json::parse(
        metrics_report_to_json(runs[i].report, runs[i].bundle.label_names));
    std::cout << kinds[i] << " fit+eval " << runs[i].seconds << " s\n";
  }

  const std::string table = render_metrics_table(kinds, reports);
  std::cout << table;

  json combined;
  combined["config"] = json::parse(rm.config_json);
  combined["partition"] = "test";
  combined["models"] = std::move(per_model);
  const fs::path json_path = config.output_dir / "compare_report.json";
  const fs::path text_path = config.output_dir / "compare_report.txt";
  write_text_file(json_path, combined.dump(2) + "\n");
  write_text_file(text_path, table);
  rm.outputs.push_back(json_path.string());
  rm.outputs.push_back(text_path.string());

  rm.seconds_total = seconds_since(t_start);
  save_run_manifest(rm, config.output_dir / "run_manifest.json");
  std::cout << "wrote " << json_path.string() << '\n';
  return 0;
}

int dispatch(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cuisine classification toolkit: ordered recipe token "
               "sequences in, one of the trained cuisine labels out"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  CommonOpts split_opts;
  CLI::App* sub_split = app.add_subcommand(
      "split", "Partition a dataset into train/validation/test");
  add_common(sub_split, split_opts);

  CommonOpts train_opts;
  std::string train_split;
  CLI::App* sub_train =
      app.add_subcommand("train", "Fit one model and persist it");
  add_common(sub_train, train_opts);
  sub_train->add_option("--split", train_split,
                        "Split manifest to reuse (default: split per config)");

  CommonOpts eval_opts;
  std::string eval_model, eval_split, eval_which = "test";
  CLI::App* sub_eval =
      app.add_subcommand("evaluate", "Score a trained model on one partition");
  add_common(sub_eval, eval_opts);
  sub_eval->add_option("--model", eval_model, "Trained model file")->required();
  sub_eval->add_option("--split", eval_split, "Split manifest file")->required();
  sub_eval->add_option("--which", eval_which,
                       "Partition: train, validation or test");

  CommonOpts predict_opts;
  std::string predict_model, predict_in = "-", predict_out = "-";
  CLI::App* sub_predict = app.add_subcommand(
      "predict", "Classify JSONL records ({id, tokens}) line by line");
  add_common(sub_predict, predict_opts);
  sub_predict->add_option("--model", predict_model, "Trained model file")
      ->required();
  sub_predict->add_option("-i,--input", predict_in, "Input JSONL ('-' stdin)");
  sub_predict->add_option("--output", predict_out, "Output JSONL ('-' stdout)");

  CommonOpts analyze_opts;
  std::string analyze_out;
  CLI::App* sub_analyze = app.add_subcommand(
      "analyze", "Dataset statistics: counts, frequency table, sparsity");
  add_common(sub_analyze, analyze_opts);
  sub_analyze->add_option("--report", analyze_out, "Also write a JSON report");

  CommonOpts grad_opts;
  GradCheckCli grad_cli;
  CLI::App* sub_grad = app.add_subcommand(
      "gradcheck", "Finite-difference check of analytic gradients");
  add_common(sub_grad, grad_opts);
  sub_grad->add_option("--model-kind", grad_cli.kind,
                       "lstm, transformer, logreg or svm")
      ->required();
  sub_grad->add_option("--docs", grad_cli.docs, "Synthetic example count");
  sub_grad->add_option("--vocab", grad_cli.vocab, "Synthetic vocabulary size");
  sub_grad->add_option("--classes", grad_cli.classes, "Synthetic class count");
  sub_grad->add_option("--embed-dim", grad_cli.embed_dim, "Embedding width");
  sub_grad->add_option("--hidden-dim", grad_cli.hidden_dim, "Recurrent width");
  sub_grad->add_option("--layers", grad_cli.layers, "Stacked layer count");
  sub_grad->add_option("--heads", grad_cli.n_heads, "Attention heads");
  sub_grad->add_option("--max-len", grad_cli.max_len, "Sequence length cap");
  sub_grad->add_option("--eps", grad_cli.eps,
                       "Central difference step (default per kind)");
  sub_grad->add_option("--threshold", grad_cli.threshold,
                       "Max relative error to pass (default per kind)");
  sub_grad->add_option("--samples", grad_cli.samples,
                       "Entries checked per tensor (0 = all)");
  sub_grad->add_flag("--corrupt-gradient", grad_cli.corrupt,
                     "Damage one gradient entry (negative-control hook)");

  CommonOpts compare_opts;
  std::string compare_split;
  CLI::App* sub_compare = app.add_subcommand(
      "compare", "Train and evaluate every model kind on one split");
  add_common(sub_compare, compare_opts);
  sub_compare->add_option("--split", compare_split,
                          "Split manifest to reuse (default: split per config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (app.got_subcommand(sub_split)) {
    return dispatch([&] { return cmd_split(split_opts); });
  }
  if (app.got_subcommand(sub_train)) {
    return dispatch([&] { return cmd_train(train_opts, train_split); });
  }
  if (app.got_subcommand(sub_eval)) {
    return dispatch(
        [&] { return cmd_evaluate(eval_opts, eval_model, eval_split, eval_which); });
  }
  if (app.got_subcommand(sub_predict)) {
    return dispatch(
        [&] { return cmd_predict(predict_opts, predict_model, predict_in, predict_out); });
  }
  if (app.got_subcommand(sub_analyze)) {
    return dispatch([&] { return cmd_analyze(analyze_opts, analyze_out); });
  }
  if (app.got_subcommand(sub_grad)) {
    return dispatch([&] { return cmd_gradcheck(grad_opts, grad_cli); });
  }
  if (app.got_subcommand(sub_compare)) {
    return dispatch([&] { return cmd_compare(compare_opts, compare_split); });
  }
  return 2;
}
