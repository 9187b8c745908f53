#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "foaa/tape.hpp"
#include "foaa/tensor.hpp"

namespace foaa {

struct MultimodalSample {
  Tensor image;    // c×h×w
  Tensor tabular;  // d_in
  std::size_t label = 0;
};

struct Dataset {
  std::vector<MultimodalSample> samples;
  std::size_t num_classes = 2;

  std::size_t size() const { return samples.size(); }
  std::vector<std::size_t> labels() const;
  std::vector<std::size_t> class_counts() const;
  // Throws if labels are out of range or modality shapes are inconsistent.
  void validate() const;
};

struct GeneratorConfig {
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  double noise = 0.1;
  std::size_t channels = 1, height = 16, width = 16;
  std::size_t tabular_dim = 8;
  std::size_t latent_dim = 2;
};

/// Generated samples together with the hidden quantities that produced them.
struct GeneratedDataset {
  Dataset data;
  std::vector<double> w_a, w_b;               // hidden unit directions
  std::vector<std::vector<double>> z_a, z_b;  // per-sample latents
};

/// Interaction task: latents z_a, z_b ~ N(0, I); label = [sign(w_a·z_a) ==
/// sign(w_b·z_b)]. The image renders z_a as a sum of fixed low-frequency
/// cosine patterns, the tabular row renders z_b through a random orthonormal
/// map; both get additive Gaussian noise of standard deviation `noise`. Each
/// modality on its own is independent of the label.
GeneratedDataset gen_interaction_dataset(const GeneratorConfig& config);

/// Same generative family with class 0 drawn with probability `ratio`
/// (latents are rejection-sampled to match the drawn class).
GeneratedDataset gen_imbalanced_dataset(const GeneratorConfig& config, double ratio);

// Label implied by a pair of latents under hidden directions w_a, w_b.
std::size_t interaction_label(std::span<const double> w_a, std::span<const double> z_a,
                              std::span<const double> w_b, std::span<const double> z_b);

struct SamplerWeights {
  std::vector<double> probabilities;

  /// Weight of sample i is (1/K)/count(label_i), K the number of classes
  /// present, normalised to sum to one.
  static SamplerWeights inverse_frequency(std::span<const std::size_t> labels);
  static SamplerWeights uniform(std::size_t n);
  void validate() const;
};

/// k i.i.d. indices drawn with replacement according to the weights.
std::vector<std::size_t> weighted_draws(const SamplerWeights& weights, std::size_t k, Rng& rng);
std::vector<std::size_t> weighted_draws(const SamplerWeights& weights, std::size_t k, std::uint64_t seed);

struct AugmentConfig {
  double flip_p = 0.5;
  double erase_p = 0.1;
  double erase_min_area = 0.02;
  double erase_max_area = 0.20;
};

struct AugmentRecord {
  bool flipped = false;
  bool erased = false;
  std::size_t top = 0, left = 0, erase_h = 0, erase_w = 0;
};

Tensor flip_horizontal(const Tensor& img);

/// Random horizontal flip, then random erasing of one rectangle covering
/// between erase_min_area and erase_max_area of the plane (all channels).
Tensor augment(const Tensor& img, const AugmentConfig& config, Rng& rng, AugmentRecord* record = nullptr);

struct DatasetSplit {
  std::vector<std::size_t> train, test;
  std::size_t fold_id = 0;
  std::uint64_t seed = 0;
};

/// Monte Carlo cross-validation: each fold is an independent random partition
/// with round(n * test_frac) test indices. Index lists are sorted.
std::vector<DatasetSplit> monte_carlo_splits(std::size_t n, std::size_t folds, double test_frac, std::uint64_t seed);

// On-disk layout of a dataset directory: tabular.csv (feature columns plus
// "label"), images.foat (n×c×h×w), labels.csv (single "label" column).
void save_dataset(const std::filesystem::path& dir, const Dataset& data);

/// Reads a dataset directory. Images come from images.foat when present,
/// otherwise from one FOAT file per sample under images/ (sorted by name).
Dataset load_dataset(const std::filesystem::path& dir);

struct TabularTable {
  std::vector<std::string> feature_names;
  std::vector<Tensor> rows;
  std::vector<std::size_t> labels;
};

TabularTable read_tabular_csv(const std::filesystem::path& path);
void write_tabular_csv(const std::filesystem::path& path, const Dataset& data);

}  // namespace foaa
