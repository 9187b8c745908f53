#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "foaa/data.hpp"
#include "foaa/metrics.hpp"
#include "foaa/model.hpp"

namespace foaa {

/// -log softmax(logits)[label], stabilised by max subtraction.
Var cross_entropy(Var logits, std::size_t label);

struct TrainConfig {
  double lr = 0.00016;
  double weight_decay = 0.005;
  std::size_t batch_size = 8;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool weighted_sampler = false;
  bool augment = false;
  // Skipping the per-epoch loss pass halves the cost of a run.
  bool record_loss = true;
  AugmentConfig augmentation;

  void validate() const;
};

/// Adam with bias correction and coupled L2 weight decay (λ·w added to the
/// gradient). Frozen parameters are skipped entirely.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, const TrainConfig& config);

  // Applies one update from the gradients currently stored in the parameters.
  void step();
  std::size_t steps() const { return t_; }

 private:
  struct Moments {
    Tensor m, v;
  };
  std::vector<Parameter*> params_;
  std::vector<Moments> moments_;
  double lr_, weight_decay_, beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

struct TrainResult {
  // Mean eval-mode cross-entropy over the training indices after each epoch.
  std::vector<double> loss_trace;
  std::size_t steps = 0;
};

/// Mini-batch training on `train` indices. Each epoch draws train.size()
/// samples, either a shuffled pass or, with weighted_sampler, i.i.d. draws
/// under inverse class-frequency weights. Throws NumericError naming the
/// first operation that produced a non-finite value when the loss diverges.
TrainResult train_model(Model& model, const Dataset& data, std::span<const std::size_t> train,
                        const TrainConfig& config);

struct Predictions {
  std::vector<std::vector<double>> probabilities;
  std::vector<std::size_t> labels;

  // P(class 1) per sample, the binary ROC score.
  std::vector<double> positive_scores() const;
  std::vector<bool> positive_flags() const;
};

Predictions predict(Model& model, const Dataset& data, std::span<const std::size_t> indices);
MetricsReport evaluate(Model& model, const Dataset& data, std::span<const std::size_t> indices);
double mean_loss(Model& model, const Dataset& data, std::span<const std::size_t> indices);

}  // namespace foaa
