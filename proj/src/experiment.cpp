#include "foaa/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "foaa/errors.hpp"
#include "foaa/foat.hpp"

namespace fs = std::filesystem;

namespace foaa {

namespace {

template <typename T>
void read_key(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : keys) known = known || item.key() == k;
    if (!known) throw ConfigError("unknown key '" + item.key() + "' in " + where);
  }
}

Json to_json(const GeneratorConfig& g) {
  return Json{{"n", g.n},         {"noise", g.noise},         {"channels", g.channels},
              {"height", g.height}, {"width", g.width}, {"tabular_dim", g.tabular_dim},
              {"latent_dim", g.latent_dim}};
}

GeneratorConfig generator_from_json(const Json& j) {
  reject_unknown(j, {"n", "noise", "channels", "height", "width", "tabular_dim", "latent_dim"}, "dataset.params");
  GeneratorConfig g;
  read_key(j, "n", g.n);
  read_key(j, "noise", g.noise);
  read_key(j, "channels", g.channels);
  read_key(j, "height", g.height);
  read_key(j, "width", g.width);
  read_key(j, "tabular_dim", g.tabular_dim);
  read_key(j, "latent_dim", g.latent_dim);
  return g;
}

Json to_json(const TrainConfig& t) {
  return Json{{"lr", t.lr},
              {"weight_decay", t.weight_decay},
              {"batch_size", t.batch_size},
              {"epochs", t.epochs},
              {"beta1", t.beta1},
              {"beta2", t.beta2},
              {"epsilon", t.epsilon},
              {"weighted_sampler", t.weighted_sampler},
              {"record_loss", t.record_loss},
              {"augment", t.augment},
              {"augmentation",
               {{"flip_p", t.augmentation.flip_p},
                {"erase_p", t.augmentation.erase_p},
                {"erase_min_area", t.augmentation.erase_min_area},
                {"erase_max_area", t.augmentation.erase_max_area}}}};
}

TrainConfig train_from_json(const Json& j) {
  reject_unknown(j,
                 {"lr", "weight_decay", "batch_size", "epochs", "beta1", "beta2", "epsilon", "weighted_sampler",
                  "record_loss", "augment", "augmentation"},
                 "train");
  TrainConfig t;
  read_key(j, "lr", t.lr);
  read_key(j, "weight_decay", t.weight_decay);
  read_key(j, "batch_size", t.batch_size);
  read_key(j, "epochs", t.epochs);
  read_key(j, "beta1", t.beta1);
  read_key(j, "beta2", t.beta2);
  read_key(j, "epsilon", t.epsilon);
  read_key(j, "weighted_sampler", t.weighted_sampler);
  read_key(j, "record_loss", t.record_loss);
  read_key(j, "augment", t.augment);
  if (j.contains("augmentation")) {
    const Json& a = j.at("augmentation");
    reject_unknown(a, {"flip_p", "erase_p", "erase_min_area", "erase_max_area"}, "train.augmentation");
    read_key(a, "flip_p", t.augmentation.flip_p);
    read_key(a, "erase_p", t.augmentation.erase_p);
    read_key(a, "erase_min_area", t.augmentation.erase_min_area);
    read_key(a, "erase_max_area", t.augmentation.erase_max_area);
  }
  return t;
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string metric_or_na(const std::optional<double>& v) { return v ? fixed(*v) : "NA"; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os << text;
  if (!os) throw IoError("write failed for " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

std::string relative_name(const fs::path& p, const fs::path& base) {
  return fs::relative(p, base).generic_string();
}

void write_manifest(const ExperimentConfig& config, const std::string& command, const fs::path& out,
                    const std::vector<fs::path>& artifacts, Json extra = Json::object()) {
  Json m;
  m["command"] = command;
  m["config"] = to_json(config);
  m["seeds"] = Json{{"master", config.seed}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  Json hashes = Json::object();
  for (const fs::path& a : artifacts) hashes[relative_name(a, out)] = sha256_file(a);
  m["artifacts"] = hashes;
  write_text(out / "manifest.json", m.dump(2) + "\n");
}

Json input_hashes(const ExperimentConfig& config) {
  Json inputs = Json::object();
  if (config.dataset.generator != "files") return inputs;
  const fs::path dir(config.dataset.path);
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() != "manifest.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const fs::path& f : files) inputs[relative_name(f, dir)] = sha256_file(f);
  return inputs;
}

ModelConfig model_config_for(const ExperimentConfig& config, Arch arch, const Dataset& data) {
  ModelConfig mc;
  mc.arch = arch;
  mc.embed_dim = config.m;
  mc.directions = config.directions;
  mc.div_epsilon = config.div_epsilon;
  mc.fit_to(data);
  return mc;
}

std::string loss_csv(const std::vector<FoldOutcome>& folds) {
  std::string s = "fold,epoch,loss\n";
  for (const FoldOutcome& f : folds)
    for (std::size_t e = 0; e < f.loss_trace.size(); ++e)
      s += std::to_string(f.fold) + "," + std::to_string(e + 1) + "," + fixed(f.loss_trace[e]) + "\n";
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  parsed_arch();
  ablation_rows();
  if (folds == 0) throw ConfigError("folds must be at least 1");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
  if (m == 0) throw ConfigError("m must be positive");
  if (!directions.a_to_b && !directions.b_to_a) throw ConfigError("at least one cross direction must be enabled");
  if (!(div_epsilon > 0.0)) throw ConfigError("div_epsilon must be positive");
  if (dataset.generator != "interaction" && dataset.generator != "imbalanced" && dataset.generator != "files")
    throw ConfigError("dataset.generator must be interaction, imbalanced or files");
  if (dataset.generator == "files" && dataset.path.empty()) throw ConfigError("dataset.path is required for files");
  train.validate();
}

Arch ExperimentConfig::parsed_arch() const {
  auto a = parse_arch(arch);
  if (!a) throw ConfigError("unknown arch '" + arch + "'; valid rows: " + valid_arch_names());
  return *a;
}

std::vector<Arch> ExperimentConfig::ablation_rows() const {
  if (archs.empty()) return {kAllArchs.begin(), kAllArchs.end()};
  std::vector<Arch> out;
  for (Arch a : kAllArchs)
    for (const std::string& name : archs)
      if (to_string(a) == name) out.push_back(a);
  for (const std::string& name : archs)
    if (!parse_arch(name)) throw ConfigError("unknown arch '" + name + "'; valid rows: " + valid_arch_names());
  return out;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["arch"] = c.arch;
  j["archs"] = c.archs;
  j["dataset"] = Json{{"generator", c.dataset.generator},
                      {"params", to_json(c.dataset.params)},
                      {"class0_ratio", c.dataset.class0_ratio},
                      {"path", c.dataset.path}};
  j["train"] = to_json(c.train);
  j["folds"] = c.folds;
  j["test_fraction"] = c.test_fraction;
  j["seed"] = c.seed;
  j["out"] = c.out;
  j["m"] = c.m;
  j["directions"] = Json{{"a_to_b", c.directions.a_to_b}, {"b_to_a", c.directions.b_to_a}};
  j["div_epsilon"] = c.div_epsilon;
  j["save_params"] = c.save_params;
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  try {
    reject_unknown(j,
                   {"arch", "archs", "dataset", "train", "folds", "test_fraction", "seed", "out", "m", "directions",
                    "div_epsilon", "save_params"},
                   "config");
    ExperimentConfig c;
    read_key(j, "arch", c.arch);
    read_key(j, "archs", c.archs);
    if (j.contains("dataset")) {
      const Json& d = j.at("dataset");
      reject_unknown(d, {"generator", "params", "class0_ratio", "path"}, "dataset");
      read_key(d, "generator", c.dataset.generator);
      read_key(d, "class0_ratio", c.dataset.class0_ratio);
      read_key(d, "path", c.dataset.path);
      if (d.contains("params")) c.dataset.params = generator_from_json(d.at("params"));
    }
    if (j.contains("train")) c.train = train_from_json(j.at("train"));
    read_key(j, "folds", c.folds);
    read_key(j, "test_fraction", c.test_fraction);
    read_key(j, "seed", c.seed);
    read_key(j, "out", c.out);
    read_key(j, "m", c.m);
    if (j.contains("directions")) {
      const Json& d = j.at("directions");
      reject_unknown(d, {"a_to_b", "b_to_a"}, "directions");
      read_key(d, "a_to_b", c.directions.a_to_b);
      read_key(d, "b_to_a", c.directions.b_to_a);
    }
    read_key(j, "div_epsilon", c.div_epsilon);
    read_key(j, "save_params", c.save_params);
    return c;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(is);
  } catch (const Json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  if (j.is_object() && j.contains("command") && j.contains("config")) return config_from_json(j.at("config"));
  return config_from_json(j);
}

Json to_json(const ModelConfig& c) {
  return Json{{"arch", std::string(to_string(c.arch))},
              {"embed_dim", c.embed_dim},
              {"num_classes", c.num_classes},
              {"image",
               {{"channels", c.image.channels},
                {"height", c.image.height},
                {"width", c.image.width},
                {"stage1_channels", c.image.stage1_channels},
                {"stage2_channels", c.image.stage2_channels},
                {"freeze_stage1", c.image.freeze_stage1},
                {"freeze_stage2", c.image.freeze_stage2}}},
              {"tabular",
               {{"input_dim", c.tabular.input_dim},
                {"hidden_dim", c.tabular.hidden_dim},
                {"dropout", c.tabular.dropout}}},
              {"directions", {{"a_to_b", c.directions.a_to_b}, {"b_to_a", c.directions.b_to_a}}},
              {"div_epsilon", c.div_epsilon}};
}

ModelConfig model_config_from_json(const Json& j) {
  try {
    ModelConfig c;
    const auto arch = parse_arch(j.at("arch").get<std::string>());
    if (!arch) throw ContractError("saved model names an unknown arch");
    c.arch = *arch;
    c.embed_dim = j.at("embed_dim").get<std::size_t>();
    c.num_classes = j.at("num_classes").get<std::size_t>();
    const Json& im = j.at("image");
    c.image.channels = im.at("channels");
    c.image.height = im.at("height");
    c.image.width = im.at("width");
    c.image.stage1_channels = im.at("stage1_channels");
    c.image.stage2_channels = im.at("stage2_channels");
    c.image.freeze_stage1 = im.at("freeze_stage1");
    c.image.freeze_stage2 = im.at("freeze_stage2");
    const Json& tb = j.at("tabular");
    c.tabular.input_dim = tb.at("input_dim");
    c.tabular.hidden_dim = tb.at("hidden_dim");
    c.tabular.dropout = tb.at("dropout");
    c.directions.a_to_b = j.at("directions").at("a_to_b");
    c.directions.b_to_a = j.at("directions").at("b_to_a");
    c.div_epsilon = j.at("div_epsilon");
    return c;
  } catch (const Json::exception& e) {
    throw ContractError(std::string("malformed model.json: ") + e.what());
  }
}

std::uint64_t fold_seed(std::uint64_t master, std::size_t fold) {
  // splitmix64 finaliser over the (master, fold) pair
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(fold) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = 1;
#ifdef _OPENMP
  n = static_cast<std::size_t>(omp_get_max_threads());
#endif
  if (const char* env = std::getenv("FOAA_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<std::size_t>(v);
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

std::string sha256_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf;
  while (is) {
    is.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(is.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md;
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

Dataset materialize_dataset(const ExperimentConfig& config) {
  const DatasetSpec& d = config.dataset;
  if (d.generator == "files") return load_dataset(d.path);
  GeneratorConfig g = d.params;
  g.seed = config.seed;
  if (d.generator == "imbalanced") return gen_imbalanced_dataset(g, d.class0_ratio).data;
  return gen_interaction_dataset(g).data;
}

std::vector<FoldOutcome> run_folds(const ExperimentConfig& config, Arch arch, const Dataset& data,
                                   const std::vector<DatasetSplit>& splits, bool keep_models) {
  const ModelConfig mc = model_config_for(config, arch, data);
  std::vector<FoldOutcome> out(splits.size());
  std::vector<std::exception_ptr> errors(splits.size());
  const int workers = static_cast<int>(worker_count(splits.size()));
  const long long jobs = static_cast<long long>(splits.size());

#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
  for (long long i = 0; i < jobs; ++i) {
    try {
      const DatasetSplit& split = splits[static_cast<std::size_t>(i)];
      FoldOutcome& f = out[static_cast<std::size_t>(i)];
      f.fold = split.fold_id;
      f.seed = fold_seed(config.seed, split.fold_id);
      Model model = Model::create(mc, f.seed);
      TrainConfig tc = config.train;
      tc.seed = f.seed;
      f.loss_trace = train_model(model, data, split.train, tc).loss_trace;
      f.predictions = predict(model, data, split.test);
      f.metrics = compute_metrics(f.predictions.probabilities, f.predictions.labels, data.num_classes);
      if (keep_models) f.model.emplace(std::move(model));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

std::string results_header() { return "fold,arch,auc,spec,sens,f1mi,f1ma,acc,epochs,seed"; }

std::vector<std::string> results_rows(const ExperimentConfig& config, Arch arch,
                                      const std::vector<FoldOutcome>& folds) {
  const std::string name(to_string(arch));
  const std::string epochs = std::to_string(config.train.epochs);
  std::vector<std::string> rows;
  std::vector<double> auc, spec, sens, f1mi, f1ma, acc;
  for (const FoldOutcome& f : folds) {
    const MetricsReport& m = f.metrics;
    rows.push_back(std::to_string(f.fold) + "," + name + "," + metric_or_na(m.auc) + "," +
                   fixed(m.specificity) + "," + fixed(m.sensitivity) + "," + fixed(m.f1_micro) + "," +
                   fixed(m.f1_macro) + "," + fixed(m.accuracy) + "," + epochs + "," + std::to_string(f.seed));
    if (m.auc) auc.push_back(*m.auc);
    spec.push_back(m.specificity);
    sens.push_back(m.sensitivity);
    f1mi.push_back(m.f1_micro);
    f1ma.push_back(m.f1_macro);
    acc.push_back(m.accuracy);
  }
  auto cell = [](const std::vector<double>& v) -> std::string {
    if (v.empty()) return "NA";
    const MetricSummary s = summarize(v);
    return fixed(s.mean) + "±" + fixed(s.std);
  };
  rows.push_back("summary," + name + "," + cell(auc) + "," + cell(spec) + "," + cell(sens) + "," + cell(f1mi) + "," +
                 cell(f1ma) + "," + cell(acc) + "," + epochs + "," + std::to_string(config.seed));
  return rows;
}

RunSummary cmd_gen_data(const ExperimentConfig& config) {
  config.validate();
  if (config.dataset.generator == "files") throw ConfigError("gen-data needs a generator, not files");
  const fs::path out(config.out);
  ensure_dir(out);
  const Dataset data = materialize_dataset(config);
  save_dataset(out, data);
  RunSummary r{out, {out / "tabular.csv", out / "images.foat", out / "labels.csv"}};
  GeneratorConfig g = config.dataset.params;
  Json gen = to_json(g);
  gen["seed"] = config.seed;
  gen["generator"] = config.dataset.generator;
  if (config.dataset.generator == "imbalanced") gen["class0_ratio"] = config.dataset.class0_ratio;
  write_manifest(config, "gen-data", out, r.artifacts, Json{{"generator", gen}});
  r.artifacts.push_back(out / "manifest.json");
  return r;
}

RunSummary cmd_train(const ExperimentConfig& config) {
  config.validate();
  const Arch arch = config.parsed_arch();
  const fs::path out(config.out);
  ensure_dir(out);
  const Dataset data = materialize_dataset(config);
  const auto splits = monte_carlo_splits(data.size(), config.folds, config.test_fraction, config.seed);
  const auto folds = run_folds(config, arch, data, splits, config.save_params);

  RunSummary r{out, {}};
  std::string csv = results_header() + "\n";
  for (const std::string& row : results_rows(config, arch, folds)) csv += row + "\n";
  write_text(out / "results.csv", csv);
  r.artifacts.push_back(out / "results.csv");
  if (config.train.record_loss) {
    write_text(out / "loss.csv", loss_csv(folds));
    r.artifacts.push_back(out / "loss.csv");
  }
  Json seeds = Json::array();
  for (const FoldOutcome& f : folds) seeds.push_back(f.seed);
  if (config.save_params) {
    for (const FoldOutcome& f : folds) {
      const fs::path dir = out / "params" / ("fold" + std::to_string(f.fold));
      ensure_dir(dir);
      const auto params = f.model->parameters();
      foat::save_parameters(dir, params);
      write_text(dir / "model.json", to_json(f.model->config()).dump(2) + "\n");
      for (const Parameter* p : params) r.artifacts.push_back(dir / (p->name + ".foat"));
      r.artifacts.push_back(dir / "manifest.txt");
      r.artifacts.push_back(dir / "model.json");
    }
  }
  write_manifest(config, "train", out, r.artifacts, Json{{"fold_seeds", seeds}, {"inputs", input_hashes(config)}});
  r.artifacts.push_back(out / "manifest.json");
  return r;
}

RunSummary cmd_ablate(const ExperimentConfig& config) {
  config.validate();
  const fs::path out(config.out);
  ensure_dir(out);
  const Dataset data = materialize_dataset(config);
  const auto splits = monte_carlo_splits(data.size(), config.folds, config.test_fraction, config.seed);

  std::string csv = results_header() + "\n";
  std::string roc = "arch,fold,fpr,tpr\n";
  std::string loss = "arch,fold,epoch,loss\n";
  for (Arch arch : config.ablation_rows()) {
    const auto folds = run_folds(config, arch, data, splits, false);
    const std::string name(to_string(arch));
    for (const std::string& row : results_rows(config, arch, folds)) csv += row + "\n";
    for (const FoldOutcome& f : folds) {
      if (data.num_classes == 2) {
        const auto scores = f.predictions.positive_scores();
        const auto flags = f.predictions.positive_flags();
        for (const RocPoint& p : roc_curve(scores, flags))
          roc += name + "," + std::to_string(f.fold) + "," + fixed(p.fpr) + "," + fixed(p.tpr) + "\n";
      }
      for (std::size_t e = 0; e < f.loss_trace.size(); ++e)
        loss += name + "," + std::to_string(f.fold) + "," + std::to_string(e + 1) + "," + fixed(f.loss_trace[e]) + "\n";
    }
  }
  RunSummary r{out, {out / "results.csv", out / "roc.csv"}};
  write_text(out / "results.csv", csv);
  write_text(out / "roc.csv", roc);
  if (config.train.record_loss) {
    write_text(out / "loss.csv", loss);
    r.artifacts.push_back(out / "loss.csv");
  }
  Json seeds = Json::array();
  for (const DatasetSplit& s : splits) seeds.push_back(fold_seed(config.seed, s.fold_id));
  write_manifest(config, "ablate", out, r.artifacts, Json{{"fold_seeds", seeds}, {"inputs", input_hashes(config)}});
  r.artifacts.push_back(out / "manifest.json");
  return r;
}

bool GradCheckReport::passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const GradCheckEntry& e) { return e.passed; });
}

GradCheckReport cmd_gradcheck(const ExperimentConfig& config, const GradCheckSuiteConfig& suite, std::ostream& report) {
  const fs::path out(config.out);
  ensure_dir(out);
  GradCheckReport r{run_gradcheck_suite(suite)};
  std::string csv = "op_class,instances,max_rel_error,status\n";
  for (const GradCheckEntry& e : r.entries) {
    std::ostringstream err;
    err << std::scientific << std::setprecision(3) << e.max_rel_error;
    const char* status = e.passed ? "PASS" : "FAIL";
    report << std::left << std::setw(28) << e.op_class << " " << status << "  max_rel_error=" << err.str()
           << "  instances=" << e.instances << "\n";
    csv += e.op_class + "," + std::to_string(e.instances) + "," + err.str() + "," + status + "\n";
  }
  write_text(out / "gradcheck.csv", csv);
  write_manifest(config, "gradcheck", out, {out / "gradcheck.csv"},
                 Json{{"gradcheck", {{"seed", suite.seed}, {"instances", suite.instances}, {"step", suite.step},
                                     {"tolerance", suite.tolerance}, {"dim", suite.dim}}}});
  return r;
}

RunSummary cmd_export_embeddings(const ExperimentConfig& config, const fs::path& params_dir,
                                 std::optional<Arch> expected_arch) {
  std::ifstream is(params_dir / "model.json");
  if (!is) throw IoError("cannot open " + (params_dir / "model.json").string());
  Json mj;
  try {
    mj = Json::parse(is);
  } catch (const Json::exception& e) {
    throw ContractError(std::string("malformed model.json: ") + e.what());
  }
  const ModelConfig mc = model_config_from_json(mj);
  if (expected_arch && *expected_arch != mc.arch)
    throw ContractError("parameters belong to arch '" + std::string(to_string(mc.arch)) + "', not '" +
                        std::string(to_string(*expected_arch)) + "'");
  Model model = Model::create(mc, 0);
  auto params = model.parameters();
  foat::load_parameters(params_dir, params);

  const Dataset data = materialize_dataset(config);
  ModelConfig fitted = mc;
  fitted.fit_to(data);
  if (fitted.image.channels != mc.image.channels || fitted.image.height != mc.image.height ||
      fitted.image.width != mc.image.width || fitted.tabular.input_dim != mc.tabular.input_dim)
    throw ContractError("dataset shapes do not match the saved model");

  const fs::path out(config.out);
  ensure_dir(out);
  std::string csv;
  for (std::size_t i = 0; i < mc.embed_dim; ++i) csv += "e" + std::to_string(i) + ",";
  csv += "label\n";
  for (const MultimodalSample& s : data.samples) {
    Tape tape(false);
    const Var e = model.features(tape, s);
    for (double v : e.value().data()) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g,", v);
      csv += buf;
    }
    csv += std::to_string(s.label) + "\n";
  }
  write_text(out / "embeddings.csv", csv);
  RunSummary r{out, {out / "embeddings.csv"}};
  std::vector<fs::path> param_files;
  for (const auto& e : fs::directory_iterator(params_dir))
    if (e.is_regular_file()) param_files.push_back(e.path());
  std::sort(param_files.begin(), param_files.end());
  Json params_hashes = Json::object();
  for (const fs::path& f : param_files) params_hashes[f.filename().string()] = sha256_file(f);
  write_manifest(config, "export-embeddings", out, r.artifacts,
                 Json{{"params_dir", params_dir.string()}, {"params", params_hashes}, {"inputs", input_hashes(config)}});
  r.artifacts.push_back(out / "manifest.json");
  return r;
}

}  // namespace foaa
