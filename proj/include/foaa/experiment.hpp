#pragma once

// Config-driven experiment runner behind the `foaa` command line tool.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "foaa/gradcheck_suite.hpp"
#include "foaa/model.hpp"
#include "foaa/train.hpp"

namespace foaa {

using Json = nlohmann::ordered_json;

struct DatasetSpec {
  // "interaction", "imbalanced", or "files" (read from `path`).
  std::string generator = "interaction";
  GeneratorConfig params;
  double class0_ratio = 0.8;
  std::string path;
};

struct ExperimentConfig {
  std::string arch = "foaa";
  // Rows run by ablate; empty means all twelve in table order.
  std::vector<std::string> archs;
  DatasetSpec dataset;
  TrainConfig train;
  std::size_t folds = 15;
  double test_fraction = 0.2;
  // Master seed. The dataset, the splits and every fold's initialisation and
  // training stream are derived from it.
  std::uint64_t seed = 0;
  std::string out = "foaa_out";
  std::size_t m = 64;
  CrossDirections directions;
  double div_epsilon = kDefaultDivEpsilon;
  bool save_params = true;

  void validate() const;
  Arch parsed_arch() const;
  std::vector<Arch> ablation_rows() const;
};

Json to_json(const ExperimentConfig& config);
// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const Json& j);
/// Reads a config file. A manifest written by a previous run is accepted too,
/// its "config" member is used.
ExperimentConfig load_config(const std::filesystem::path& path);

Json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const Json& j);

// Per-fold seed for initialisation and training.
std::uint64_t fold_seed(std::uint64_t master, std::size_t fold);

/// Worker bound from FOAA_THREADS, falling back to the OpenMP default; never
/// more than `jobs`.
std::size_t worker_count(std::size_t jobs);

std::string sha256_file(const std::filesystem::path& path);

// Builds or loads the dataset described by the config.
Dataset materialize_dataset(const ExperimentConfig& config);

struct FoldOutcome {
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  MetricsReport metrics;
  std::vector<double> loss_trace;
  Predictions predictions;
  std::optional<Model> model;
};

/// Trains and evaluates `arch` on every split. Folds run concurrently on up to
/// worker_count() threads; results come back in fold order.
std::vector<FoldOutcome> run_folds(const ExperimentConfig& config, Arch arch, const Dataset& data,
                                   const std::vector<DatasetSplit>& splits, bool keep_models);

// Results table rows for one arch: one per fold and a mean±std summary.
std::vector<std::string> results_rows(const ExperimentConfig& config, Arch arch,
                                      const std::vector<FoldOutcome>& folds);
std::string results_header();

struct RunSummary {
  std::filesystem::path out_dir;
  std::vector<std::filesystem::path> artifacts;
};

RunSummary cmd_gen_data(const ExperimentConfig& config);
RunSummary cmd_train(const ExperimentConfig& config);
RunSummary cmd_ablate(const ExperimentConfig& config);

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool passed() const;
};

// Prints one line per operation class to `report`.
GradCheckReport cmd_gradcheck(const ExperimentConfig& config, const GradCheckSuiteConfig& suite,
                              std::ostream& report);

/// Writes embeddings.csv (m values plus label per sample) for the model saved
/// in `params_dir`. `expected_arch`, when given, must match the saved model.
RunSummary cmd_export_embeddings(const ExperimentConfig& config, const std::filesystem::path& params_dir,
                                 std::optional<Arch> expected_arch);

}  // namespace foaa
