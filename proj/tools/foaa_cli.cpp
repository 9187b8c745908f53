// foaa: experiment runner for flattened outer arithmetic attention models.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "foaa/errors.hpp"
#include "foaa/experiment.hpp"
#include "foaa/tape.hpp"

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kIo = 3, kNumeric = 4, kContract = 5 };

struct Overrides {
  std::string config, out, arch, data, params, generator, fault;
  std::uint64_t seed = 0;
  std::size_t folds = 0, epochs = 0, n = 0, m = 0, instances = 10;
  double lr = 0, noise = 0, ratio = 0, fault_factor = 2.0;
  std::vector<std::string> archs;
  bool weighted_sampler = false, no_params = false, no_loss = false;
};

struct Options {
  CLI::Option *seed, *out, *folds, *arch, *data, *epochs, *lr, *n, *noise, *m, *generator, *ratio, *archs, *sampler,
      *no_params, *no_loss;
};

Options add_common(CLI::App* cmd, Overrides& o) {
  Options opt{};
  cmd->add_option("--config", o.config, "JSON config file or a manifest.json from an earlier run");
  opt.seed = cmd->add_option("--seed", o.seed, "master seed");
  opt.out = cmd->add_option("--out", o.out, "output directory");
  opt.folds = cmd->add_option("--folds", o.folds, "Monte Carlo folds")->check(CLI::PositiveNumber);
  opt.arch = cmd->add_option("--arch", o.arch, "model row");
  opt.data = cmd->add_option("--data", o.data, "dataset directory written by gen-data");
  opt.epochs = cmd->add_option("--epochs", o.epochs, "training epochs");
  opt.lr = cmd->add_option("--lr", o.lr, "learning rate");
  opt.n = cmd->add_option("--n", o.n, "generated dataset size");
  opt.noise = cmd->add_option("--noise", o.noise, "generator noise level");
  opt.m = cmd->add_option("--m", o.m, "embedding width");
  opt.generator = cmd->add_option("--generator", o.generator, "interaction or imbalanced");
  opt.ratio = cmd->add_option("--class0-ratio", o.ratio, "class 0 share for the imbalanced generator");
  opt.archs = cmd->add_option("--archs", o.archs, "subset of rows for ablate");
  opt.sampler = cmd->add_flag("--weighted-sampler", o.weighted_sampler, "inverse-frequency sampling");
  opt.no_params = cmd->add_flag("--no-params", o.no_params, "do not save trained parameters");
  opt.no_loss = cmd->add_flag("--no-loss", o.no_loss, "skip the per-epoch loss pass");
  return opt;
}

foaa::ExperimentConfig resolve(const Overrides& o, const Options& opt) {
  foaa::ExperimentConfig c;
  if (!o.config.empty()) c = foaa::load_config(o.config);
  if (opt.seed->count()) c.seed = o.seed;
  if (opt.out->count()) c.out = o.out;
  if (opt.folds->count()) c.folds = o.folds;
  if (opt.arch->count()) c.arch = o.arch;
  if (opt.data->count()) {
    c.dataset.generator = "files";
    c.dataset.path = o.data;
  }
  if (opt.epochs->count()) c.train.epochs = o.epochs;
  if (opt.lr->count()) c.train.lr = o.lr;
  if (opt.n->count()) c.dataset.params.n = o.n;
  if (opt.noise->count()) c.dataset.params.noise = o.noise;
  if (opt.m->count()) c.m = o.m;
  if (opt.generator->count()) c.dataset.generator = o.generator;
  if (opt.ratio->count()) c.dataset.class0_ratio = o.ratio;
  if (opt.archs->count()) c.archs = o.archs;
  if (opt.sampler->count()) c.train.weighted_sampler = true;
  if (opt.no_params->count()) c.save_params = false;
  if (opt.no_loss->count()) c.train.record_loss = false;
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flattened outer arithmetic attention: training, ablation and gradient checks"};
  app.require_subcommand(1);

  Overrides o;
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic multimodal dataset");
  auto* train = app.add_subcommand("train", "train one model row over Monte Carlo folds");
  auto* ablate = app.add_subcommand("ablate", "train every model row under identical folds and seeds");
  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every operation class");
  auto* exp = app.add_subcommand("export-embeddings", "write fused embeddings of a trained model");

  const Options gen_opt = add_common(gen, o);
  const Options train_opt = add_common(train, o);
  const Options ablate_opt = add_common(ablate, o);
  const Options grad_opt = add_common(grad, o);
  const Options exp_opt = add_common(exp, o);
  grad->add_option("--instances", o.instances, "random instances per class")->check(CLI::PositiveNumber);
  grad->add_option("--inject-fault", o.fault)->group("");
  grad->add_option("--fault-factor", o.fault_factor)->group("");
  exp->add_option("--params", o.params, "directory with model.json and FOAT parameters")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) {
      const auto r = foaa::cmd_gen_data(resolve(o, gen_opt));
      std::cout << "wrote dataset to " << r.out_dir.string() << "\n";
    } else if (train->parsed()) {
      const auto r = foaa::cmd_train(resolve(o, train_opt));
      std::cout << "wrote " << (r.out_dir / "results.csv").string() << "\n";
    } else if (ablate->parsed()) {
      const auto r = foaa::cmd_ablate(resolve(o, ablate_opt));
      std::cout << "wrote " << (r.out_dir / "results.csv").string() << "\n";
    } else if (grad->parsed()) {
      const auto config = resolve(o, grad_opt);
      foaa::GradCheckSuiteConfig suite;
      suite.seed = config.seed;
      suite.instances = o.instances;
      if (!o.fault.empty()) foaa::set_global_adjoint_fault(o.fault, o.fault_factor);
      const auto report = foaa::cmd_gradcheck(config, suite, std::cout);
      return report.passed() ? kOk : kNumeric;
    } else if (exp->parsed()) {
      const auto config = resolve(o, exp_opt);
      std::optional<foaa::Arch> expected;
      if (exp_opt.arch->count()) {
        expected = foaa::parse_arch(o.arch);
        if (!expected) throw foaa::ConfigError("unknown arch '" + o.arch + "'; valid rows: " + foaa::valid_arch_names());
      }
      const auto r = foaa::cmd_export_embeddings(config, o.params, expected);
      std::cout << "wrote " << (r.out_dir / "embeddings.csv").string() << "\n";
    }
  } catch (const foaa::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const foaa::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIo;
  } catch (const foaa::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kNumeric;
  } catch (const foaa::ContractError& e) {
    std::cerr << "contract error: " << e.what() << "\n";
    return kContract;
  } catch (const foaa::DimensionError& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return kContract;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kOk;
}
