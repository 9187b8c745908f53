#include "foaa/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include "foaa/errors.hpp"
#include "foaa/foat.hpp"

namespace foaa {

std::vector<std::size_t> Dataset::labels() const {
  std::vector<std::size_t> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (const auto& s : samples) counts.at(s.label)++;
  return counts;
}

void Dataset::validate() const {
  if (samples.empty()) throw ConfigError("dataset is empty");
  const Shape img = samples.front().image.shape();
  const Shape tab = samples.front().tabular.shape();
  if (img.size() != 3) throw DimensionError("images must be c×h×w, got " + shape_to_string(img));
  if (tab.size() != 1) throw DimensionError("tabular rows must be vectors, got " + shape_to_string(tab));
  for (const auto& s : samples) {
    if (s.label >= num_classes)
      throw ContractError("label " + std::to_string(s.label) + " out of range for " + std::to_string(num_classes) +
                          " classes");
    if (s.image.shape() != img || s.tabular.shape() != tab) throw DimensionError("inconsistent sample shapes");
  }
}

// ---------------------------------------------------------------------------
// Generators

namespace {

std::vector<double> random_unit(std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal;
  std::vector<double> v(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : v) {
      x = normal(rng);
      norm += x * x;
    }
  } while (norm < 1e-12);
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

// Columns are orthonormal; the map is scaled so each output feature has unit
// variance for z ~ N(0, I).
std::vector<std::vector<double>> random_orthonormal_map(std::size_t rows, std::size_t cols, Rng& rng) {
  std::normal_distribution<double> normal;
  std::vector<std::vector<double>> basis;  // cols vectors of length rows
  while (basis.size() < cols) {
    std::vector<double> v(rows);
    for (auto& x : v) x = normal(rng);
    for (const auto& b : basis) {
      const double d = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
      for (std::size_t i = 0; i < rows; ++i) v[i] -= d * b[i];
    }
    const double n = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (n < 1e-8) continue;
    for (auto& x : v) x /= n;
    basis.push_back(std::move(v));
  }
  const double gain = std::sqrt(static_cast<double>(rows) / static_cast<double>(cols));
  std::vector<std::vector<double>> m(rows, std::vector<double>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m[r][c] = gain * basis[c][r];
  return m;
}

// Low-frequency 2-D cosine patterns, each with unit RMS over the plane.
std::vector<std::vector<double>> cosine_patterns(std::size_t count, std::size_t h, std::size_t w) {
  static constexpr std::pair<int, int> freqs[] = {{0, 1}, {1, 0}, {1, 1}, {0, 2}, {2, 0},
                                                  {1, 2}, {2, 1}, {2, 2}, {0, 3}, {3, 0}};
  if (count > std::size(freqs)) throw ConfigError("latent_dim larger than the available image patterns");
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < count; ++k) {
    const auto [fy, fx] = freqs[k];
    std::vector<double> p(h * w);
    double ss = 0.0;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double v = std::cos(std::numbers::pi * fy * (static_cast<double>(y) + 0.5) / static_cast<double>(h)) *
                         std::cos(std::numbers::pi * fx * (static_cast<double>(x) + 0.5) / static_cast<double>(w));
        p[y * w + x] = v;
        ss += v * v;
      }
    const double rms = std::sqrt(ss / static_cast<double>(h * w));
    for (auto& v : p) v /= rms;
    out.push_back(std::move(p));
  }
  return out;
}

void check_generator(const GeneratorConfig& c) {
  if (c.n < 100) throw ConfigError("generator needs n >= 100, got " + std::to_string(c.n));
  if (c.latent_dim == 0 || c.tabular_dim < c.latent_dim)
    throw ConfigError("tabular_dim must be at least latent_dim, and latent_dim positive");
  if (c.height < 4 || c.width < 4 || c.channels == 0) throw ConfigError("image must be at least 1×4×4");
  if (c.noise < 0.0) throw ConfigError("noise must be non-negative");
}

GeneratedDataset generate(const GeneratorConfig& c, double class0_prob, bool rebalance) {
  check_generator(c);
  Rng rng(c.seed);
  std::normal_distribution<double> normal;
  GeneratedDataset g;
  g.w_a = random_unit(c.latent_dim, rng);
  g.w_b = random_unit(c.latent_dim, rng);
  const auto patterns = cosine_patterns(c.latent_dim, c.height, c.width);
  const auto tab_map = random_orthonormal_map(c.tabular_dim, c.latent_dim, rng);
  std::bernoulli_distribution pick_class0(class0_prob);

  g.data.num_classes = 2;
  g.data.samples.reserve(c.n);
  const std::size_t plane = c.height * c.width;
  for (std::size_t s = 0; s < c.n; ++s) {
    std::vector<double> za(c.latent_dim), zb(c.latent_dim);
    std::size_t label = 0;
    const std::size_t want = rebalance ? (pick_class0(rng) ? 0 : 1) : 0;
    do {
      for (auto& x : za) x = normal(rng);
      for (auto& x : zb) x = normal(rng);
      label = interaction_label(g.w_a, za, g.w_b, zb);
    } while (rebalance && label != want);

    Tensor img(Shape{c.channels, c.height, c.width});
    for (std::size_t ch = 0; ch < c.channels; ++ch)
      for (std::size_t i = 0; i < plane; ++i) {
        double v = 0.0;
        for (std::size_t k = 0; k < c.latent_dim; ++k) v += za[k] * patterns[k][i];
        img[ch * plane + i] = v + c.noise * normal(rng);
      }
    Tensor tab(Shape{c.tabular_dim});
    for (std::size_t r = 0; r < c.tabular_dim; ++r) {
      double v = 0.0;
      for (std::size_t k = 0; k < c.latent_dim; ++k) v += tab_map[r][k] * zb[k];
      tab[r] = v + c.noise * normal(rng);
    }
    g.data.samples.push_back({std::move(img), std::move(tab), label});
    g.z_a.push_back(std::move(za));
    g.z_b.push_back(std::move(zb));
  }
  return g;
}

}  // namespace

std::size_t interaction_label(std::span<const double> w_a, std::span<const double> z_a, std::span<const double> w_b,
                              std::span<const double> z_b) {
  const double ua = std::inner_product(w_a.begin(), w_a.end(), z_a.begin(), 0.0);
  const double ub = std::inner_product(w_b.begin(), w_b.end(), z_b.begin(), 0.0);
  return (ua >= 0.0) == (ub >= 0.0) ? 1 : 0;
}

GeneratedDataset gen_interaction_dataset(const GeneratorConfig& config) { return generate(config, 0.5, false); }

GeneratedDataset gen_imbalanced_dataset(const GeneratorConfig& config, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("imbalance ratio must lie in (0, 1)");
  return generate(config, ratio, true);
}

// ---------------------------------------------------------------------------
// Sampling

SamplerWeights SamplerWeights::inverse_frequency(std::span<const std::size_t> labels) {
  if (labels.empty()) throw ConfigError("cannot weight an empty label set");
  const std::size_t k = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::size_t> counts(k, 0);
  for (auto l : labels) counts[l]++;
  const auto present = static_cast<double>(std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
  SamplerWeights w;
  w.probabilities.reserve(labels.size());
  double total = 0.0;
  for (auto l : labels) {
    const double p = (1.0 / present) / static_cast<double>(counts[l]);
    w.probabilities.push_back(p);
    total += p;
  }
  for (auto& p : w.probabilities) p /= total;
  return w;
}

SamplerWeights SamplerWeights::uniform(std::size_t n) {
  if (n == 0) throw ConfigError("cannot weight an empty label set");
  return SamplerWeights{std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

void SamplerWeights::validate() const {
  if (probabilities.empty()) throw ContractError("sampler weights are empty");
  double total = 0.0;
  for (double p : probabilities) {
    if (!(p > 0.0) || !std::isfinite(p)) throw ContractError("sampler weights must be positive and finite");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ContractError("sampler weights must sum to 1");
}

std::vector<std::size_t> weighted_draws(const SamplerWeights& weights, std::size_t k, Rng& rng) {
  weights.validate();
  std::discrete_distribution<std::size_t> dist(weights.probabilities.begin(), weights.probabilities.end());
  std::vector<std::size_t> out(k);
  for (auto& i : out) i = dist(rng);
  return out;
}

std::vector<std::size_t> weighted_draws(const SamplerWeights& weights, std::size_t k, std::uint64_t seed) {
  Rng rng(seed);
  return weighted_draws(weights, k, rng);
}

// ---------------------------------------------------------------------------
// Augmentation

Tensor flip_horizontal(const Tensor& img) {
  if (img.rank() != 3) throw DimensionError("flip_horizontal: expected c×h×w, got " + shape_to_string(img.shape()));
  const std::size_t C = img.dim(0), H = img.dim(1), W = img.dim(2);
  Tensor out(img.shape());
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) out[(c * H + y) * W + x] = img[(c * H + y) * W + (W - 1 - x)];
  return out;
}

Tensor augment(const Tensor& img, const AugmentConfig& config, Rng& rng, AugmentRecord* record) {
  if (img.rank() != 3) throw DimensionError("augment: expected c×h×w, got " + shape_to_string(img.shape()));
  AugmentRecord rec;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Tensor out = img;
  if (unit(rng) < config.flip_p) {
    out = flip_horizontal(out);
    rec.flipped = true;
  }
  if (unit(rng) < config.erase_p) {
    const std::size_t C = img.dim(0), H = img.dim(1), W = img.dim(2);
    const double area = static_cast<double>(H * W);
    std::uniform_real_distribution<double> frac(config.erase_min_area, config.erase_max_area);
    std::uniform_real_distribution<double> log_ratio(std::log(0.3), std::log(1.0 / 0.3));
    for (int attempt = 0; attempt < 10 && !rec.erased; ++attempt) {
      const double target = frac(rng) * area;
      const double aspect = std::exp(log_ratio(rng));
      const auto eh = static_cast<std::size_t>(std::lround(std::sqrt(target * aspect)));
      const auto ew = static_cast<std::size_t>(std::lround(std::sqrt(target / aspect)));
      const double got = static_cast<double>(eh * ew) / area;
      if (eh == 0 || ew == 0 || eh > H || ew > W || got < config.erase_min_area || got > config.erase_max_area)
        continue;
      std::uniform_int_distribution<std::size_t> top(0, H - eh), left(0, W - ew);
      rec.top = top(rng);
      rec.left = left(rng);
      rec.erase_h = eh;
      rec.erase_w = ew;
      rec.erased = true;
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t y = rec.top; y < rec.top + eh; ++y)
          for (std::size_t x = rec.left; x < rec.left + ew; ++x) out[(c * H + y) * W + x] = 0.0;
    }
  }
  if (record) *record = rec;
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo splits

std::vector<DatasetSplit> monte_carlo_splits(std::size_t n, std::size_t folds, double test_frac, std::uint64_t seed) {
  if (folds < 1) throw ConfigError("need at least one fold");
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw ConfigError("test fraction must lie in (0, 1)");
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_frac));
  if (n_test == 0 || n_test >= n)
    throw ConfigError("split of " + std::to_string(n) + " samples at test fraction " + std::to_string(test_frac) +
                      " leaves an empty side");
  Rng rng(seed);
  std::vector<DatasetSplit> out;
  std::vector<std::size_t> idx(n);
  for (std::size_t f = 0; f < folds; ++f) {
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    DatasetSplit s;
    s.fold_id = f;
    s.seed = seed;
    s.test.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
    std::sort(s.test.begin(), s.test.end());
    std::sort(s.train.begin(), s.train.end());
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Files

namespace {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(std::string_view s, const std::filesystem::path& path) {
  double v = 0.0;
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError(path.string() + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::size_t parse_label(std::string_view s, const std::filesystem::path& path) {
  const double v = parse_double(s, path);
  if (v < 0.0 || v != std::floor(v)) throw IoError(path.string() + ": label must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

TabularTable read_tabular_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": missing header");
  const auto header = split_csv_line(line);
  auto label_it = std::find(header.begin(), header.end(), "label");
  if (label_it == header.end()) throw IoError(path.string() + ": no 'label' column");
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  TabularTable table;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (i != label_col) table.feature_names.push_back(header[i]);
  if (table.feature_names.empty()) throw IoError(path.string() + ": no feature columns");
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw IoError(path.string() + ": row has wrong number of columns");
    Tensor row(Shape{table.feature_names.size()});
    std::size_t k = 0;
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i == label_col)
        table.labels.push_back(parse_label(cells[i], path));
      else
        row[k++] = parse_double(cells[i], path);
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_tabular_csv(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const std::size_t d = data.samples.empty() ? 0 : data.samples.front().tabular.numel();
  for (std::size_t i = 0; i < d; ++i) out << 'f' << i << ',';
  out << "label\n";
  for (const auto& s : data.samples) {
    for (double v : s.tabular.data()) out << format_double(v) << ',';
    out << s.label << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

void save_dataset(const std::filesystem::path& dir, const Dataset& data) {
  data.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_tabular_csv(dir / "tabular.csv", data);

  const Shape& img = data.samples.front().image.shape();
  Tensor batch(Shape{data.size(), img[0], img[1], img[2]});
  const std::size_t per = shape_numel(img);
  for (std::size_t i = 0; i < data.size(); ++i)
    std::copy(data.samples[i].image.data().begin(), data.samples[i].image.data().end(),
              batch.data().begin() + static_cast<std::ptrdiff_t>(i * per));
  foat::write_file(dir / "images.foat", batch);

  std::ofstream labels(dir / "labels.csv", std::ios::trunc);
  if (!labels) throw IoError("cannot write labels.csv in " + dir.string());
  labels << "label\n";
  for (const auto& s : data.samples) labels << s.label << '\n';
  if (!labels) throw IoError("write failed: labels.csv");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  TabularTable table = read_tabular_csv(dir / "tabular.csv");
  std::vector<Tensor> images;
  if (std::filesystem::exists(dir / "images.foat")) {
    Tensor batch = foat::read_file(dir / "images.foat");
    if (batch.rank() != 4) throw IoError("images.foat must be n×c×h×w, got " + shape_to_string(batch.shape()));
    const Shape img{batch.dim(1), batch.dim(2), batch.dim(3)};
    const std::size_t per = shape_numel(img);
    for (std::size_t i = 0; i < batch.dim(0); ++i) {
      auto first = batch.data().begin() + static_cast<std::ptrdiff_t>(i * per);
      images.emplace_back(img, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(per)));
    }
  } else if (std::filesystem::is_directory(dir / "images")) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir / "images"))
      if (e.path().extension() == ".foat") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) images.push_back(foat::read_file(f));
  } else {
    throw IoError("no images.foat or images/ in " + dir.string());
  }
  if (images.size() != table.rows.size())
    throw IoError("image count " + std::to_string(images.size()) + " differs from tabular row count " +
                  std::to_string(table.rows.size()));

  if (std::filesystem::exists(dir / "labels.csv")) {
    std::ifstream in(dir / "labels.csv");
    std::string line;
    std::getline(in, line);
    std::size_t i = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (i >= table.labels.size() || parse_label(line, dir / "labels.csv") != table.labels[i])
        throw IoError("labels.csv disagrees with tabular.csv at row " + std::to_string(i));
      ++i;
    }
    if (i != table.labels.size()) throw IoError("labels.csv has " + std::to_string(i) + " rows");
  }

  Dataset data;
  std::size_t max_label = 0;
  for (std::size_t i = 0; i < images.size(); ++i) {
    max_label = std::max(max_label, table.labels[i]);
    data.samples.push_back({std::move(images[i]), std::move(table.rows[i]), table.labels[i]});
  }
  data.num_classes = std::max<std::size_t>(2, max_label + 1);
  data.validate();
  return data;
}

}  // namespace foaa
