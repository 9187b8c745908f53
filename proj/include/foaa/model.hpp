#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "foaa/attention.hpp"
#include "foaa/data.hpp"
#include "foaa/encoders.hpp"

namespace foaa {

/// Model variants of the ablation table, in table order.
enum class Arch {
  Mlp,            // tabular encoder only
  Cnn,            // image encoder only
  CnnStandardSa,  // image encoder + scaled dot-product self-attention
  CnnFoaaSa,      // image encoder + FOAA self-attention (all four operators)
  CrossOa,
  CrossOp,
  CrossOs,
  CrossOd,
  CrossOaOp,
  CrossOaOpOs,
  DirectOuter,    // simplified direct outer-arithmetic fusion, no attention
  Foaa,           // cross-attention with all four operators
};

inline constexpr std::array<Arch, 12> kAllArchs = {
    Arch::Mlp,     Arch::Cnn,     Arch::CnnStandardSa, Arch::CnnFoaaSa, Arch::CrossOa,     Arch::CrossOp,
    Arch::CrossOs, Arch::CrossOd, Arch::CrossOaOp,     Arch::CrossOaOpOs, Arch::DirectOuter, Arch::Foaa};

std::string_view to_string(Arch arch);
std::optional<Arch> parse_arch(std::string_view name);
std::string valid_arch_names();

bool uses_image(Arch arch);
bool uses_tabular(Arch arch);
// Operators used by the arch's attention or fusion block (empty for plain
// encoders).
std::vector<OuterOpKind> arch_operators(Arch arch);

struct ModelConfig {
  Arch arch = Arch::Foaa;
  std::size_t embed_dim = 64;
  std::size_t num_classes = 2;
  ImageEncoderConfig image;
  TabularEncoderConfig tabular;
  CrossDirections directions;
  double div_epsilon = kDefaultDivEpsilon;

  // Copies modality shapes and class count from the data.
  void fit_to(const Dataset& data);
};

class Model {
 public:
  static Model create(const ModelConfig& config, std::uint64_t seed);

  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  /// Fused m-vector fed to the classification head.
  Var embed(Tape& tape, const MultimodalSample& sample, Mode mode = Mode::Eval, Rng* rng = nullptr);
  // Hidden layer of the head, what export-embeddings writes.
  Var features(Tape& tape, const MultimodalSample& sample, Mode mode = Mode::Eval, Rng* rng = nullptr);
  Var forward(Tape& tape, const MultimodalSample& sample, Mode mode = Mode::Eval, Rng* rng = nullptr);

  // Class probabilities for one sample in eval mode.
  std::vector<double> predict_proba(const MultimodalSample& sample);

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  const ModelConfig& config() const { return config_; }

 private:
  Model() = default;

  ModelConfig config_;
  std::optional<ImageEncoderParams> image_;
  std::optional<TabularEncoderParams> tabular_;
  std::optional<FoaaHeadParams> sdp_;
  std::optional<FoaaBlockParams> self_;
  std::optional<FoaaBlockParams> cross_ab_, cross_ba_;
  FusionHeadParams head_;
};

// Softmax of a logit vector.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace foaa
