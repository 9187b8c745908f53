#include "foaa/model.hpp"

#include <algorithm>
#include <cmath>

#include "foaa/errors.hpp"

namespace foaa {

namespace {

constexpr std::pair<Arch, std::string_view> kArchNames[] = {
    {Arch::Mlp, "mlp"},           {Arch::Cnn, "cnn"},          {Arch::CnnStandardSa, "cnn_standard_sa"},
    {Arch::CnnFoaaSa, "cnn_foaa_sa"}, {Arch::CrossOa, "cross_oa"}, {Arch::CrossOp, "cross_op"},
    {Arch::CrossOs, "cross_os"},  {Arch::CrossOd, "cross_od"}, {Arch::CrossOaOp, "cross_oa_op"},
    {Arch::CrossOaOpOs, "cross_oa_op_os"}, {Arch::DirectOuter, "direct_outer"}, {Arch::Foaa, "foaa"},
};

}  // namespace

std::string_view to_string(Arch arch) {
  for (const auto& [a, name] : kArchNames)
    if (a == arch) return name;
  return "?";
}

std::optional<Arch> parse_arch(std::string_view name) {
  for (const auto& [a, n] : kArchNames)
    if (n == name) return a;
  return std::nullopt;
}

std::string valid_arch_names() {
  std::string out;
  for (const auto& [a, n] : kArchNames) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

bool uses_image(Arch arch) { return arch != Arch::Mlp; }

bool uses_tabular(Arch arch) {
  return arch != Arch::Cnn && arch != Arch::CnnStandardSa && arch != Arch::CnnFoaaSa;
}

std::vector<OuterOpKind> arch_operators(Arch arch) {
  using K = OuterOpKind;
  switch (arch) {
    case Arch::Mlp:
    case Arch::Cnn:
    case Arch::CnnStandardSa: return {};
    case Arch::CrossOa: return {K::Add};
    case Arch::CrossOp: return {K::Mul};
    case Arch::CrossOs: return {K::Sub};
    case Arch::CrossOd: return {K::Div};
    case Arch::CrossOaOp: return {K::Add, K::Mul};
    case Arch::CrossOaOpOs: return {K::Add, K::Mul, K::Sub};
    case Arch::CnnFoaaSa:
    case Arch::DirectOuter:
    case Arch::Foaa: return {kAllOuterOps.begin(), kAllOuterOps.end()};
  }
  return {};
}

void ModelConfig::fit_to(const Dataset& data) {
  data.validate();
  const auto& s = data.samples.front();
  image.channels = s.image.dim(0);
  image.height = s.image.dim(1);
  image.width = s.image.dim(2);
  tabular.input_dim = s.tabular.numel();
  num_classes = data.num_classes;
}

Model Model::create(const ModelConfig& config, std::uint64_t seed) {
  if (config.embed_dim == 0) throw ConfigError("embedding dimension must be positive");
  if (config.num_classes < 2) throw ConfigError("need at least two classes");
  Model model;
  model.config_ = config;
  model.config_.image.embed_dim = config.embed_dim;
  model.config_.tabular.embed_dim = config.embed_dim;
  const auto& c = model.config_;
  Rng rng(seed);
  const std::size_t m = c.embed_dim;
  if (uses_image(c.arch)) model.image_ = ImageEncoderParams::init("image", c.image, rng);
  if (uses_tabular(c.arch)) model.tabular_ = TabularEncoderParams::init("tabular", c.tabular, rng);
  const auto ops = arch_operators(c.arch);
  switch (c.arch) {
    case Arch::CnnStandardSa: model.sdp_ = FoaaHeadParams::init("self_sdp", m, rng); break;
    case Arch::CnnFoaaSa: model.self_ = FoaaBlockParams::init("self", m, ops, rng, c.div_epsilon); break;
    case Arch::CrossOa:
    case Arch::CrossOp:
    case Arch::CrossOs:
    case Arch::CrossOd:
    case Arch::CrossOaOp:
    case Arch::CrossOaOpOs:
    case Arch::Foaa:
      if (!c.directions.a_to_b && !c.directions.b_to_a)
        throw ConfigError("cross-attention needs at least one direction");
      model.cross_ab_ = FoaaBlockParams::init("cross_ab", m, c.directions.a_to_b ? ops : std::vector<OuterOpKind>{},
                                              rng, c.div_epsilon);
      model.cross_ba_ = FoaaBlockParams::init("cross_ba", m, c.directions.b_to_a ? ops : std::vector<OuterOpKind>{},
                                              rng, c.div_epsilon);
      break;
    default: break;
  }
  model.head_ = FusionHeadParams::init("head", m, c.num_classes, rng);
  return model;
}

Var Model::embed(Tape& tape, const MultimodalSample& sample, Mode mode, Rng* rng) {
  std::optional<Var> img, tab;
  if (image_) img = encode_image(*image_, tape.constant(sample.image));
  if (tabular_) tab = encode_tabular(*tabular_, tape.constant(sample.tabular), mode, rng);
  switch (config_.arch) {
    case Arch::Mlp: return *tab;
    case Arch::Cnn: return *img;
    case Arch::CnnStandardSa: return sdp_self_attention(*sdp_, *img);
    case Arch::CnnFoaaSa: return foaa_self_attention(*self_, *img);
    case Arch::DirectOuter: return direct_outer_fusion(*img, *tab, arch_operators(config_.arch), config_.div_epsilon);
    default: return foaa_cross_attention(*cross_ab_, *cross_ba_, *img, *tab, config_.directions);
  }
}

Var Model::features(Tape& tape, const MultimodalSample& sample, Mode mode, Rng* rng) {
  return fusion_hidden(head_, embed(tape, sample, mode, rng));
}

Var Model::forward(Tape& tape, const MultimodalSample& sample, Mode mode, Rng* rng) {
  return fusion_head(head_, embed(tape, sample, mode, rng));
}

std::vector<double> Model::predict_proba(const MultimodalSample& sample) {
  Tape tape(false);
  Var logits = forward(tape, sample, Mode::Eval);
  return softmax(logits.value().data());
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  if (image_) image_->collect(out);
  if (tabular_) tabular_->collect(out);
  if (sdp_) sdp_->collect(out);
  if (self_) self_->collect(out);
  if (cross_ab_) cross_ab_->collect(out);
  if (cross_ba_) cross_ba_->collect(out);
  head_.collect(out);
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  auto ps = const_cast<Model*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.begin(), logits.end());
  const double mx = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (auto& v : p) {
    v = std::exp(v - mx);
    total += v;
  }
  for (auto& v : p) v /= total;
  return p;
}

}  // namespace foaa
