#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <tuple>
#include <utility>

#include "foaa/encoders.hpp"
#include "foaa/errors.hpp"
#include "foaa/init.hpp"
#include "foaa/model.hpp"

using namespace foaa;

namespace {

ImageEncoderConfig image_config(std::size_t c, std::size_t h, std::size_t w, std::size_t m) {
  ImageEncoderConfig ic;
  ic.channels = c;
  ic.height = h;
  ic.width = w;
  ic.embed_dim = m;
  return ic;
}

}  // namespace

TEST(ImageEncoder, ZeroImageWithZeroBiasesGivesZero) {
  Rng rng(1);
  ImageEncoderParams p = ImageEncoderParams::init("img", image_config(1, 16, 16, 12), rng);
  Tape t;
  const Tensor e = encode_image(p, t.constant(Tensor({1, 16, 16}))).value();
  EXPECT_EQ(e, Tensor({12}));
}

TEST(ImageEncoder, OutputLengthIsEmbeddingWidth) {
  Rng rng(2);
  for (auto [c, h, w] : {std::tuple{1u, 8u, 8u}, std::tuple{3u, 28u, 28u}, std::tuple{2u, 9u, 13u}}) {
    ImageEncoderParams p = ImageEncoderParams::init("img", image_config(c, h, w, 20), rng);
    Tape t;
    const Tensor e = encode_image(p, t.constant(uniform_tensor({c, h, w}, 1.0, rng))).value();
    EXPECT_EQ(e.shape(), (Shape{20}));
    EXPECT_TRUE(e.all_finite());
  }
}

TEST(ImageEncoder, RejectsWrongOrTinyInputs) {
  Rng rng(3);
  ImageEncoderParams p = ImageEncoderParams::init("img", image_config(1, 8, 8, 4), rng);
  Tape t;
  EXPECT_THROW(encode_image(p, t.constant(Tensor({1, 8, 9}))), DimensionError);
  EXPECT_THROW(encode_image(p, t.constant(Tensor({8, 8}))), DimensionError);
  EXPECT_THROW(ImageEncoderParams::init("img", image_config(1, 3, 8, 4), rng), DimensionError);
}

TEST(ImageEncoder, FreezeFlagsMarkStages) {
  Rng rng(4);
  ImageEncoderConfig ic = image_config(1, 8, 8, 4);
  ic.freeze_stage1 = true;
  ImageEncoderParams p = ImageEncoderParams::init("img", ic, rng);
  EXPECT_TRUE(p.conv1_w.frozen);
  EXPECT_TRUE(p.conv1_b.frozen);
  EXPECT_FALSE(p.conv2_w.frozen);
  EXPECT_FALSE(p.dense_w.frozen);
}

TEST(TabularEncoder, ZeroRowWithZeroBiasesGivesZero) {
  Rng rng(5);
  TabularEncoderParams p = TabularEncoderParams::init("tab", TabularEncoderConfig{}, rng);
  Tape t;
  EXPECT_EQ(encode_tabular(p, t.constant(Tensor({8}))).value(), Tensor({64}));
}

TEST(TabularEncoder, EvalModeIsDeterministic) {
  Rng rng(6);
  TabularEncoderParams p = TabularEncoderParams::init("tab", TabularEncoderConfig{}, rng);
  const Tensor row = uniform_tensor({8}, 1.0, rng);
  Tape a, b;
  EXPECT_EQ(encode_tabular(p, a.constant(row)).value(), encode_tabular(p, b.constant(row)).value());
}

TEST(TabularEncoder, TrainModeDropoutNeedsRandomStream) {
  Rng rng(7);
  TabularEncoderParams p = TabularEncoderParams::init("tab", TabularEncoderConfig{}, rng);
  Tape t;
  EXPECT_THROW(encode_tabular(p, t.constant(Tensor({8})), Mode::Train, nullptr), ContractError);
  EXPECT_THROW(encode_tabular(p, t.constant(Tensor({5}))), DimensionError);
}

TEST(TabularEncoder, TrainModeDropsHiddenUnits) {
  Rng rng(8);
  TabularEncoderConfig tc;
  tc.dropout = 0.5;
  TabularEncoderParams p = TabularEncoderParams::init("tab", tc, rng);
  const Tensor row = uniform_tensor({8}, 1.0, rng);
  Tape t;
  Rng drop(1);
  const Tensor a = encode_tabular(p, t.constant(row), Mode::Train, &drop).value();
  const Tensor b = encode_tabular(p, t.constant(row)).value();
  EXPECT_NE(a, b);
}

TEST(Dropout, InvertedScalingKeepsExpectation) {
  Rng rng(9);
  Tape t;
  Var x = t.constant(Tensor(Shape{20000}, 1.0));
  const Tensor y = dropout(x, 0.25, rng).value();
  double s = 0.0;
  std::size_t zeros = 0;
  for (double v : y.data()) {
    s += v;
    zeros += v == 0.0;
    if (v != 0.0) EXPECT_DOUBLE_EQ(v, 1.0 / 0.75);
  }
  EXPECT_NEAR(s / 20000.0, 1.0, 0.03);
  EXPECT_NEAR(static_cast<double>(zeros) / 20000.0, 0.25, 0.02);
}

TEST(Model, ArchNamesRoundTripInTableOrder) {
  const char* names[] = {"mlp",         "cnn",     "cnn_standard_sa", "cnn_foaa_sa",    "cross_oa",     "cross_op",
                         "cross_os",    "cross_od", "cross_oa_op",     "cross_oa_op_os", "direct_outer", "foaa"};
  for (std::size_t i = 0; i < kAllArchs.size(); ++i) {
    EXPECT_EQ(to_string(kAllArchs[i]), names[i]);
    EXPECT_EQ(parse_arch(names[i]), kAllArchs[i]);
  }
  EXPECT_FALSE(parse_arch("moab").has_value());
}

TEST(Model, EveryArchProducesClassProbabilities) {
  GeneratorConfig g;
  g.n = 100;
  const Dataset d = gen_interaction_dataset(g).data;
  for (Arch arch : kAllArchs) {
    ModelConfig mc;
    mc.arch = arch;
    mc.embed_dim = 8;
    mc.fit_to(d);
    Model model = Model::create(mc, 1);
    const auto p = model.predict_proba(d.samples[0]);
    ASSERT_EQ(p.size(), 2u) << to_string(arch);
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12) << to_string(arch);
    Tape t;
    EXPECT_EQ(model.embed(t, d.samples[0]).value().numel(), 8u);
  }
}

TEST(Model, ParameterNamesAreUnique) {
  GeneratorConfig g;
  g.n = 100;
  const Dataset d = gen_interaction_dataset(g).data;
  ModelConfig mc;
  mc.fit_to(d);
  Model model = Model::create(mc, 1);
  std::set<std::string> names;
  for (const Parameter* p : std::as_const(model).parameters()) EXPECT_TRUE(names.insert(p->name).second) << p->name;
  // Four operators, three projections, two directions.
  EXPECT_EQ(std::count_if(names.begin(), names.end(), [](const std::string& n) { return n.rfind("cross_", 0) == 0; }), 24);
}
