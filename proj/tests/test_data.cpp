#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <unistd.h>

#include "foaa/data.hpp"
#include "foaa/errors.hpp"
#include "foaa/foat.hpp"

using namespace foaa;
namespace fs = std::filesystem;

namespace {

GeneratorConfig config(std::size_t n, std::uint64_t seed, double noise = 0.1) {
  GeneratorConfig c;
  c.n = n;
  c.seed = seed;
  c.noise = noise;
  return c;
}

double fraction_of_ones(const Dataset& d) {
  const auto counts = d.class_counts();
  return static_cast<double>(counts[1]) / static_cast<double>(d.size());
}

// Plain logistic regression by full-batch gradient descent on standardised
// features; returns held-out accuracy on the last 20%.
double logistic_probe(const std::vector<std::vector<double>>& x, const std::vector<std::size_t>& y) {
  const std::size_t n = x.size(), d = x[0].size(), n_train = n * 4 / 5;
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (std::size_t i = 0; i < n_train; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x[i][j] / static_cast<double>(n_train);
  for (std::size_t i = 0; i < n_train; ++i)
    for (std::size_t j = 0; j < d; ++j) sd[j] += std::pow(x[i][j] - mean[j], 2) / static_cast<double>(n_train);
  for (auto& s : sd) s = std::sqrt(s) + 1e-12;
  auto feat = [&](std::size_t i, std::size_t j) { return (x[i][j] - mean[j]) / sd[j]; };
  std::vector<double> w(d, 0.0);
  double b = 0.0;
  for (int it = 0; it < 300; ++it) {
    std::vector<double> gw(d, 0.0);
    double gb = 0.0;
    for (std::size_t i = 0; i < n_train; ++i) {
      double z = b;
      for (std::size_t j = 0; j < d; ++j) z += w[j] * feat(i, j);
      const double err = 1.0 / (1.0 + std::exp(-z)) - static_cast<double>(y[i]);
      for (std::size_t j = 0; j < d; ++j) gw[j] += err * feat(i, j);
      gb += err;
    }
    for (std::size_t j = 0; j < d; ++j) w[j] -= 0.1 * (gw[j] / static_cast<double>(n_train) + 1e-3 * w[j]);
    b -= 0.1 * gb / static_cast<double>(n_train);
  }
  std::size_t correct = 0;
  for (std::size_t i = n_train; i < n; ++i) {
    double z = b;
    for (std::size_t j = 0; j < d; ++j) z += w[j] * feat(i, j);
    correct += static_cast<std::size_t>((z >= 0.0) == (y[i] == 1));
  }
  return static_cast<double>(correct) / static_cast<double>(n - n_train);
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("foaa_test_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(InteractionData, NoiselessLabelsFollowLatents) {
  const GeneratedDataset g = gen_interaction_dataset(config(1000, 4, 0.0));
  ASSERT_EQ(g.data.size(), 1000u);
  for (std::size_t i = 0; i < g.data.size(); ++i) {
    double pa = 0.0, pb = 0.0;
    for (std::size_t j = 0; j < g.w_a.size(); ++j) {
      pa += g.w_a[j] * g.z_a[i][j];
      pb += g.w_b[j] * g.z_b[i][j];
    }
    const std::size_t want = ((pa >= 0.0) == (pb >= 0.0)) ? 1 : 0;
    ASSERT_EQ(g.data.samples[i].label, want) << i;
  }
}

TEST(InteractionData, ClassesAreBalanced) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const double f = fraction_of_ones(gen_interaction_dataset(config(1000, seed)).data);
    EXPECT_GE(f, 0.45);
    EXPECT_LE(f, 0.55);
  }
}

TEST(InteractionData, EachModalityAloneIsUninformative) {
  const GeneratedDataset g = gen_interaction_dataset(config(1000, 7));
  std::vector<std::vector<double>> img, tab;
  for (const auto& s : g.data.samples) {
    img.emplace_back(s.image.data().begin(), s.image.data().end());
    tab.emplace_back(s.tabular.data().begin(), s.tabular.data().end());
  }
  const auto y = g.data.labels();
  EXPECT_LE(logistic_probe(img, y), 0.55);
  EXPECT_LE(logistic_probe(tab, y), 0.55);
  // Sanity check on the probe: it recovers a label that is linear in one
  // modality.
  std::vector<std::size_t> linear(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    double pb = 0.0;
    for (std::size_t j = 0; j < g.w_b.size(); ++j) pb += g.w_b[j] * g.z_b[i][j];
    linear[i] = pb >= 0.0 ? 1 : 0;
  }
  EXPECT_GE(logistic_probe(tab, linear), 0.9);
}

TEST(InteractionData, SameSeedSameData) {
  const auto a = gen_interaction_dataset(config(200, 9)).data, b = gen_interaction_dataset(config(200, 9)).data;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.samples[i].image, b.samples[i].image);
    EXPECT_EQ(a.samples[i].tabular, b.samples[i].tabular);
  }
}

TEST(InteractionData, TooFewSamplesRejected) {
  EXPECT_THROW(gen_interaction_dataset(config(99, 1)), ConfigError);
}

TEST(ImbalancedData, MinorityCountWithinBinomialBand) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto counts = gen_imbalanced_dataset(config(1000, seed), 0.27).data.class_counts();
    EXPECT_GE(counts[0], 240u);
    EXPECT_LE(counts[0], 300u);
  }
}

TEST(ImbalancedData, HalfRatioIsBalanced) {
  const double f = fraction_of_ones(gen_imbalanced_dataset(config(1000, 3), 0.5).data);
  EXPECT_GE(f, 0.45);
  EXPECT_LE(f, 0.55);
}

TEST(ImbalancedData, LabelsStillFollowLatents) {
  const GeneratedDataset g = gen_imbalanced_dataset(config(300, 2, 0.0), 0.2);
  for (std::size_t i = 0; i < g.data.size(); ++i)
    EXPECT_EQ(g.data.samples[i].label, interaction_label(g.w_a, g.z_a[i], g.w_b, g.z_b[i]));
}

TEST(Sampler, InverseFrequencyBalancesEightyTwenty) {
  std::vector<std::size_t> labels(1000, 0);
  std::fill(labels.begin() + 800, labels.end(), 1);
  const auto w = SamplerWeights::inverse_frequency(labels);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto draws = weighted_draws(w, 10000, seed);
    std::size_t ones = 0;
    for (auto i : draws) ones += labels[i];
    const double f = static_cast<double>(ones) / 10000.0;
    EXPECT_GE(f, 0.48);
    EXPECT_LE(f, 0.52);
  }
}

TEST(Sampler, UniformWeightsFollowDatasetProportions) {
  std::vector<std::size_t> labels(1000, 0);
  std::fill(labels.begin() + 700, labels.end(), 1);
  const auto draws = weighted_draws(SamplerWeights::uniform(1000), 20000, 5);
  std::size_t ones = 0;
  for (auto i : draws) ones += labels[i];
  EXPECT_NEAR(static_cast<double>(ones) / 20000.0, 0.3, 0.02);
}

TEST(Sampler, SingleClassDrawsOnlyThatClass) {
  const std::vector<std::size_t> labels(50, 1);
  for (auto i : weighted_draws(SamplerWeights::inverse_frequency(labels), 500, 1)) EXPECT_EQ(labels.at(i), 1u);
}

TEST(Sampler, RejectsBadWeights) {
  EXPECT_THROW(weighted_draws(SamplerWeights{{0.5, -0.1, 0.6}}, 3, 1), ContractError);
  EXPECT_THROW(weighted_draws(SamplerWeights{{0.2, 0.2}}, 3, 1), ContractError);
}

TEST(Augment, FlipIsAnInvolution) {
  Rng rng(1);
  Tensor img({2, 3, 4});
  for (std::size_t i = 0; i < img.numel(); ++i) img[i] = static_cast<double>(i);
  const Tensor f = flip_horizontal(img);
  EXPECT_NE(f, img);
  EXPECT_EQ(f[0], 3.0);
  EXPECT_EQ(flip_horizontal(f), img);
}

TEST(Augment, ZeroProbabilitiesAreIdentity) {
  Rng rng(2);
  Tensor img({1, 8, 8});
  for (std::size_t i = 0; i < img.numel(); ++i) img[i] = 1.0 + static_cast<double>(i);
  AugmentConfig c;
  c.flip_p = 0.0;
  c.erase_p = 0.0;
  for (int i = 0; i < 20; ++i) EXPECT_EQ(augment(img, c, rng), img);
}

TEST(Augment, ErasedAreaWithinBounds) {
  Rng rng(3);
  const Tensor img(Shape{1, 32, 32}, 1.0);
  AugmentConfig c;
  c.flip_p = 0.0;
  c.erase_p = 1.0;
  std::size_t erased = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    AugmentRecord rec;
    const Tensor out = augment(img, c, rng, &rec);
    if (!rec.erased) continue;
    ++erased;
    std::size_t zeros = 0;
    for (double v : out.data()) zeros += v == 0.0;
    const double frac = static_cast<double>(zeros) / 1024.0;
    EXPECT_GE(frac, 0.02);
    EXPECT_LE(frac, 0.20);
  }
  EXPECT_GT(erased, 900u);
}

TEST(Splits, SmallExampleHasTwoTestIndices) {
  const auto s = monte_carlo_splits(10, 1, 0.2, 0);
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].test.size(), 2u);
  EXPECT_EQ(s[0].train.size(), 8u);
}

TEST(Splits, TrainAndTestPartitionEveryFold) {
  for (const auto& s : monte_carlo_splits(200, 15, 0.2, 11)) {
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    for (auto i : s.test) EXPECT_TRUE(all.insert(i).second);
    EXPECT_EQ(all.size(), 200u);
  }
}

TEST(Splits, DistinctSeedsGiveDistinctPartitions) {
  std::set<std::vector<std::size_t>> seen;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    for (const auto& s : monte_carlo_splits(100, 15, 0.2, seed)) seen.insert(s.test);
  EXPECT_EQ(seen.size(), 150u);
}

TEST(DatasetFiles, RoundTrip) {
  const fs::path dir = temp_dir("roundtrip");
  const Dataset d = gen_interaction_dataset(config(120, 5)).data;
  save_dataset(dir, d);
  const Dataset back = load_dataset(dir);
  ASSERT_EQ(back.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.samples[i].image, d.samples[i].image);
    EXPECT_EQ(back.samples[i].tabular, d.samples[i].tabular);
    EXPECT_EQ(back.samples[i].label, d.samples[i].label);
  }
  fs::remove_all(dir);
}

TEST(DatasetFiles, PerSampleImageDirectory) {
  const fs::path dir = temp_dir("persample");
  const Dataset d = gen_interaction_dataset(config(100, 6)).data;
  save_dataset(dir, d);
  fs::remove(dir / "images.foat");
  fs::create_directories(dir / "images");
  for (std::size_t i = 0; i < d.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%05zu.foat", i);
    foat::write_file(dir / "images" / name, d.samples[i].image);
  }
  const Dataset back = load_dataset(dir);
  ASSERT_EQ(back.size(), d.size());
  EXPECT_EQ(back.samples[42].image, d.samples[42].image);
  fs::remove_all(dir);
}

TEST(DatasetFiles, MalformedCsvIsAnIoError) {
  const fs::path dir = temp_dir("badcsv");
  {
    std::ofstream(dir / "t.csv") << "f0,f1\n1,2\n";
  }
  EXPECT_THROW(read_tabular_csv(dir / "t.csv"), IoError);
  {
    std::ofstream(dir / "t.csv") << "f0,label\n1,abc\n";
  }
  EXPECT_THROW(read_tabular_csv(dir / "t.csv"), IoError);
  EXPECT_THROW(load_dataset(dir / "missing"), IoError);
  fs::remove_all(dir);
}
