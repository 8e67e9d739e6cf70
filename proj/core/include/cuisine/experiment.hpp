#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cuisine/corpus.hpp"
#include "cuisine/pipeline.hpp"
#include "cuisine/preprocess.hpp"

namespace cuisine {

/// One experiment, fully resolved: data source, preprocessing, features,
/// split, model choice and every hyperparameter. The single seed drives the
/// split and every model fit. Serialized into each output artifact so a run
/// can be reproduced from any of its files.
struct ExperimentConfig {
  std::filesystem::path data_path;
  CorpusFormat data_format = CorpusFormat::jsonl;
  CleaningConfig cleaning;
  std::uint32_t min_df = 1;
  int max_len = 64;
  std::string model_kind = "logreg";
  SplitRatios ratios;
  std::uint64_t seed = 0;
  bool stratified = true;
  std::filesystem::path output_dir = "runs";
  ModelHyperparams models;
};

/// Parses the INI-style config: `[section]` headers, `key = value` lines,
/// `#` or `;` comments. Unknown sections or keys are errors.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Applies one `section.key=value` pair, same key set as the config file.
void apply_override(ExperimentConfig& config, const std::string& dotted_key,
                    const std::string& value);

/// Hyperparameters with the experiment seed and max_len stamped into every
/// per-model config.
ModelHyperparams resolved_hyperparams(const ExperimentConfig& config);

/// Sorted-key JSON snapshot; parse with experiment_config_from_json for an
/// exact round trip.
std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);

/// Written at the end of a run, after every file it references.
struct RunManifest {
  std::string config_json = "{}";
  double seconds_total = 0.0;
  double seconds_fit = 0.0;
  std::size_t n_records = 0;
  std::size_t vocab_size = 0;
  int n_classes = 0;
  double sparsity = 0.0;
  std::vector<std::string> outputs;
  std::string tool_version;
};

void save_run_manifest(const RunManifest& manifest,
                       const std::filesystem::path& path);

}  // namespace cuisine
