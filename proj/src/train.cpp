#include "foaa/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "foaa/errors.hpp"

namespace foaa {

Var cross_entropy(Var logits, std::size_t label) {
  if (!logits.valid()) throw ContractError("cross_entropy: invalid logits");
  const Tensor& z = logits.value();
  if (z.rank() != 1) throw DimensionError("cross_entropy: logits must be a vector, got " + shape_to_string(z.shape()));
  if (label >= z.numel())
    throw ContractError("cross_entropy: label " + std::to_string(label) + " out of range for " +
                        std::to_string(z.numel()) + " classes");
  const double mx = *std::max_element(z.data().begin(), z.data().end());
  double total = 0.0;
  for (double v : z.data()) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  const auto iz = logits.id();
  return logits.tape()->record("cross_entropy", Tensor::scalar(lse - z[label]), {logits},
                               [iz, label](Tape& tp, const Tensor& g) {
    const Tensor& zv = tp.value(iz);
    const auto p = softmax(zv.data());
    Tensor& gz = tp.grad_of(iz);
    for (std::size_t c = 0; c < p.size(); ++c) gz[c] += g[0] * (p[c] - (c == label ? 1.0 : 0.0));
  });
}

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be non-negative");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam betas must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

Adam::Adam(std::vector<Parameter*> params, const TrainConfig& config)
    : params_(std::move(params)),
      lr_(config.lr),
      weight_decay_(config.weight_decay),
      beta1_(config.beta1),
      beta2_(config.beta2),
      eps_(config.epsilon) {
  config.validate();
  moments_.reserve(params_.size());
  for (Parameter* p : params_) moments_.push_back({Tensor::zeros_like(p->value), Tensor::zeros_like(p->value)});
}

void Adam::step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = *params_[k];
    if (p.frozen) continue;
    if (p.grad.empty()) p.zero_grad();
    if (p.grad.shape() != p.value.shape() || moments_[k].m.shape() != p.value.shape())
      throw ContractError("adam: state for '" + p.name + "' does not match the parameter shape");
    auto& [m, v] = moments_[k];
    for (std::size_t i = 0; i < p.value.numel(); ++i) {
      const double g = p.grad[i] + weight_decay_ * p.value[i];
      m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p.value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

namespace {

void check_indices(const Dataset& data, std::span<const std::size_t> idx) {
  for (auto i : idx)
    if (i >= data.size()) throw ContractError("sample index " + std::to_string(i) + " out of range");
}

}  // namespace

TrainResult train_model(Model& model, const Dataset& data, std::span<const std::size_t> train,
                        const TrainConfig& config) {
  config.validate();
  if (train.empty()) throw ConfigError("training set is empty");
  check_indices(data, train);
  auto params = model.parameters();
  Adam adam(params, config);
  Rng rng(config.seed);

  std::vector<std::size_t> train_labels;
  for (auto i : train) train_labels.push_back(data.samples[i].label);
  const SamplerWeights weights =
      config.weighted_sampler ? SamplerWeights::inverse_frequency(train_labels) : SamplerWeights::uniform(train.size());

  TrainResult result;
  std::vector<std::size_t> order(train.begin(), train.end());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.weighted_sampler) {
      const auto draws = weighted_draws(weights, train.size(), rng);
      for (std::size_t i = 0; i < draws.size(); ++i) order[i] = train[draws[i]];
    } else {
      std::shuffle(order.begin(), order.end(), rng);
    }
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      for (Parameter* p : params) p->zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const MultimodalSample& original = data.samples[order[b]];
        MultimodalSample augmented;
        const MultimodalSample* sample = &original;
        if (config.augment) {
          augmented = original;
          augmented.image = augment(original.image, config.augmentation, rng);
          sample = &augmented;
        }
        Tape tape;
        Var loss = cross_entropy(model.forward(tape, *sample, Mode::Train, &rng), sample->label);
        if (!std::isfinite(loss.value()[0])) {
          throw NumericError("training loss became non-finite at epoch " + std::to_string(epoch) +
                             "; first offending op: " + tape.first_non_finite().value_or("cross_entropy"));
        }
        tape.backward(loss);
      }
      const double inv = 1.0 / static_cast<double>(end - start);
      for (Parameter* p : params)
        for (auto& g : p->grad.data()) g *= inv;
      adam.step();
    }
    if (config.record_loss) result.loss_trace.push_back(mean_loss(model, data, train));
  }
  result.steps = adam.steps();
  return result;
}

std::vector<double> Predictions::positive_scores() const {
  std::vector<double> s;
  s.reserve(probabilities.size());
  for (const auto& p : probabilities) s.push_back(p.at(1));
  return s;
}

std::vector<bool> Predictions::positive_flags() const {
  std::vector<bool> f;
  f.reserve(labels.size());
  for (auto l : labels) f.push_back(l == 1);
  return f;
}

Predictions predict(Model& model, const Dataset& data, std::span<const std::size_t> indices) {
  check_indices(data, indices);
  Predictions out;
  for (auto i : indices) {
    out.probabilities.push_back(model.predict_proba(data.samples[i]));
    out.labels.push_back(data.samples[i].label);
  }
  return out;
}

MetricsReport evaluate(Model& model, const Dataset& data, std::span<const std::size_t> indices) {
  const Predictions p = predict(model, data, indices);
  return compute_metrics(p.probabilities, p.labels, model.config().num_classes);
}

double mean_loss(Model& model, const Dataset& data, std::span<const std::size_t> indices) {
  check_indices(data, indices);
  double total = 0.0;
  for (auto i : indices) {
    Tape tape(false);
    Var loss = cross_entropy(model.forward(tape, data.samples[i], Mode::Eval), data.samples[i].label);
    if (!std::isfinite(loss.value()[0]))
      throw NumericError("evaluation loss is non-finite; first offending op: " +
                         tape.first_non_finite().value_or("cross_entropy"));
    total += loss.value()[0];
  }
  return total / static_cast<double>(indices.size());
}

}  // namespace foaa
