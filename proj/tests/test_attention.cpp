#include <gtest/gtest.h>

#include <cmath>

#include "foaa/attention.hpp"
#include "foaa/errors.hpp"
#include "foaa/init.hpp"
#include "test_support.hpp"

using namespace foaa;

namespace {

double oracle_entry(OuterOpKind kind, double q, double k, double eps) {
  switch (kind) {
    case OuterOpKind::Add: return q + k;
    case OuterOpKind::Sub: return q - k;
    case OuterOpKind::Mul: return q * k;
    case OuterOpKind::Div: {
      double d = k;
      if (std::abs(d) < eps) d = d < 0 ? -eps : eps;
      return q / d;
    }
  }
  return 0.0;
}

Tensor identity(std::size_t m) {
  Tensor t({m, m});
  for (std::size_t i = 0; i < m; ++i) t.at(i, i) = 1.0;
  return t;
}

FoaaHeadParams make_head(const Tensor& wq, const Tensor& wk, const Tensor& wv) {
  return FoaaHeadParams{Parameter("w_q", wq), Parameter("w_k", wk), Parameter("w_v", wv)};
}

Tensor transpose(const Tensor& a) {
  Tensor t({a.dim(1), a.dim(0)});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < a.dim(1); ++j) t.at(j, i) = a.at(i, j);
  return t;
}

Tensor negate(Tensor a) {
  for (auto& v : a.data()) v = -v;
  return a;
}

// Scalar-by-scalar evaluation of one head for m = 2: project, score, softmax
// each row, weight the values.
std::array<double, 2> hand_head_m2(OuterOpKind kind, const double wq[2][2], const double wk[2][2],
                                   const double wv[2][2], const double xq[2], const double xk[2],
                                   const double xv[2]) {
  const double q0 = wq[0][0] * xq[0] + wq[0][1] * xq[1], q1 = wq[1][0] * xq[0] + wq[1][1] * xq[1];
  const double k0 = wk[0][0] * xk[0] + wk[0][1] * xk[1], k1 = wk[1][0] * xk[0] + wk[1][1] * xk[1];
  const double v0 = wv[0][0] * xv[0] + wv[0][1] * xv[1], v1 = wv[1][0] * xv[0] + wv[1][1] * xv[1];
  const double r2 = std::sqrt(2.0);
  const double q[2] = {q0, q1};
  std::array<double, 2> out{};
  for (int i = 0; i < 2; ++i) {
    const double s0 = oracle_entry(kind, q[i], k0, 1e-6) / r2;
    const double s1 = oracle_entry(kind, q[i], k1, 1e-6) / r2;
    const double e0 = std::exp(s0), e1 = std::exp(s1);
    out[i] = (e0 * v0 + e1 * v1) / (e0 + e1);
  }
  return out;
}

}  // namespace

TEST(OuterOp, HandExamples) {
  EXPECT_EQ(outer_op(OuterOpKind::Add, Tensor::vector({1, 2}), Tensor::vector({3, 4})),
            Tensor::matrix({{4, 5}, {5, 6}}));
  EXPECT_EQ(outer_op(OuterOpKind::Div, Tensor::vector({2, 6}), Tensor::vector({1, 2})),
            Tensor::matrix({{2, 1}, {6, 3}}));
  EXPECT_EQ(outer_op(OuterOpKind::Mul, Tensor::vector({2, -1}), Tensor::vector({3, 4})),
            Tensor::matrix({{6, 8}, {-3, -4}}));
}

TEST(OuterOp, SubOfEqualVectorsHasZeroDiagonal) {
  const Tensor v = Tensor::vector({0.3, -1.7, 2.5});
  const Tensor s = outer_op(OuterOpKind::Sub, v, v);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(s.at(i, i), 0.0);
}

TEST(OuterOp, MatchesDoubleLoopAndTransposeIdentities) {
  std::mt19937_64 rng(101);
  const std::size_t m = 64;
  for (int rep = 0; rep < 200; ++rep) {
    const Tensor q = test::random_tensor({m}, rng, -3, 3), k = test::random_tensor({m}, rng, -3, 3);
    for (OuterOpKind kind : kAllOuterOps) {
      const Tensor s = outer_op(kind, q, k);
      double worst = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, std::abs(s.at(i, j) - oracle_entry(kind, q[i], k[j], 1e-6)));
      EXPECT_LE(worst, 1e-12);
    }
    EXPECT_EQ(transpose(outer_op(OuterOpKind::Add, q, k)), outer_op(OuterOpKind::Add, k, q));
    EXPECT_EQ(transpose(outer_op(OuterOpKind::Mul, q, k)), outer_op(OuterOpKind::Mul, k, q));
    EXPECT_EQ(transpose(outer_op(OuterOpKind::Sub, q, k)), negate(outer_op(OuterOpKind::Sub, k, q)));
  }
}

TEST(OuterOp, RejectsMismatchedOrNonVectorInputs) {
  EXPECT_THROW(outer_op(OuterOpKind::Add, Tensor::vector({1, 2}), Tensor::vector({1, 2, 3})), DimensionError);
  EXPECT_THROW(outer_op(OuterOpKind::Add, Tensor::matrix({{1, 2}}), Tensor::vector({1, 2})), DimensionError);
}

TEST(OuterOp, DivisionGuardKeepsZeroKeysFinite) {
  Tape t;
  Var q = t.variable(Tensor::vector({1.0, -2.0, 0.5}));
  Var k = t.variable(Tensor::vector({0.0, -0.0, 1e-9}));
  Var s = outer_op(OuterOpKind::Div, q, k);
  EXPECT_TRUE(s.value().all_finite());
  EXPECT_DOUBLE_EQ(s.value().at(0, 0), 1.0 / 1e-6);
  t.backward(sum(softmax_rows(scale(s, 1e-7))));
  EXPECT_TRUE(q.grad().all_finite());
  EXPECT_TRUE(k.grad().all_finite());
  // Inside the guard band the denominator is constant.
  for (double g : k.grad().data()) EXPECT_EQ(g, 0.0);
}

TEST(Attention, ZeroQueryKeyProjectionsAverageValues) {
  const std::size_t m = 4;
  const Tensor xv = Tensor::vector({1, 2, 3, 6});
  for (OuterOpKind kind : kAllOuterOps) {
    FoaaHeadParams head = make_head(Tensor({m, m}), Tensor({m, m}), identity(m));
    Tape t;
    Var x = t.constant(Tensor::vector({0.4, -1, 2, 0.1}));
    const AttentionResult r = attend(kind, head, x, x, t.constant(xv));
    for (double w : r.weights.value().data()) EXPECT_NEAR(w, 0.25, 1e-15);
    for (double v : r.attended.value().data()) EXPECT_NEAR(v, 3.0, 1e-12);
  }
}

TEST(Attention, AddKindIgnoresConstantKeyShift) {
  std::mt19937_64 rng(8);
  const std::size_t m = 6;
  FoaaHeadParams head = make_head(test::random_tensor({m, m}, rng), identity(m), test::random_tensor({m, m}, rng));
  const Tensor xq = test::random_tensor({m}, rng), xk = test::random_tensor({m}, rng), xv = test::random_tensor({m}, rng);
  Tensor shifted = xk;
  for (auto& v : shifted.data()) v += 3.7;
  Tape t;
  const AttentionResult a = attend(OuterOpKind::Add, head, t.constant(xq), t.constant(xk), t.constant(xv));
  const AttentionResult b = attend(OuterOpKind::Add, head, t.constant(xq), t.constant(shifted), t.constant(xv));
  EXPECT_LE(max_abs_diff(a.attended.value(), b.attended.value()), 1e-9);
  EXPECT_LE(max_abs_diff(a.weights.value(), b.weights.value()), 1e-9);
}

TEST(Attention, TwoDimensionalHandEvaluation) {
  const double wq[2][2] = {{0.5, -0.3}, {0.2, 0.8}};
  const double wk[2][2] = {{-0.6, 0.1}, {0.4, 0.9}};
  const double wv[2][2] = {{1.1, -0.2}, {0.3, 0.7}};
  const double xq[2] = {0.9, -0.4}, xk[2] = {-0.5, 1.3}, xv[2] = {0.2, 0.6};
  FoaaHeadParams head = make_head(Tensor::matrix({{0.5, -0.3}, {0.2, 0.8}}), Tensor::matrix({{-0.6, 0.1}, {0.4, 0.9}}),
                                  Tensor::matrix({{1.1, -0.2}, {0.3, 0.7}}));
  for (OuterOpKind kind : kAllOuterOps) {
    Tape t;
    const Tensor out = attention_score(kind, head, t.constant(Tensor::vector({xq[0], xq[1]})),
                                       t.constant(Tensor::vector({xk[0], xk[1]})),
                                       t.constant(Tensor::vector({xv[0], xv[1]})))
                           .value();
    const auto want = hand_head_m2(kind, wq, wk, wv, xq, xk, xv);
    EXPECT_NEAR(out[0], want[0], 1e-14) << to_string(kind);
    EXPECT_NEAR(out[1], want[1], 1e-14) << to_string(kind);
  }
  Tape t;
  const Tensor sdp = sdp_attention(head, t.constant(Tensor::vector({xq[0], xq[1]})),
                                   t.constant(Tensor::vector({xk[0], xk[1]})), t.constant(Tensor::vector({xv[0], xv[1]})))
                         .value();
  const auto want = hand_head_m2(OuterOpKind::Mul, wq, wk, wv, xq, xk, xv);
  EXPECT_NEAR(sdp[0], want[0], 1e-14);
  EXPECT_NEAR(sdp[1], want[1], 1e-14);
}

TEST(Attention, SdpWithZeroProjectionsAveragesValues) {
  const std::size_t m = 3;
  FoaaHeadParams head = make_head(Tensor({m, m}), Tensor({m, m}), identity(m));
  Tape t;
  const Tensor out = sdp_attention(head, t.constant(Tensor::vector({1, 1, 1})), t.constant(Tensor::vector({2, 2, 2})),
                                   t.constant(Tensor::vector({3, 0, 6})))
                         .value();
  for (double v : out.data()) EXPECT_NEAR(v, 3.0, 1e-12);
}

TEST(Attention, SdpCoincidesWithMulKind) {
  Rng rng(31);
  const std::size_t m = 16;
  for (int rep = 0; rep < 20; ++rep) {
    FoaaHeadParams head = FoaaHeadParams::init("h", m, rng);
    const Tensor a = uniform_tensor({m}, 2.0, rng), b = uniform_tensor({m}, 2.0, rng), c = uniform_tensor({m}, 2.0, rng);
    Tape t;
    const Tensor mul_out = attention_score(OuterOpKind::Mul, head, t.constant(a), t.constant(b), t.constant(c)).value();
    const Tensor sdp_out = sdp_attention(head, t.constant(a), t.constant(b), t.constant(c)).value();
    EXPECT_LE(max_abs_diff(mul_out, sdp_out), 1e-12);
  }
}

TEST(SelfAttention, ZeroProjectionsReturnInput) {
  const std::size_t m = 5;
  Rng rng(1);
  FoaaBlockParams block = FoaaBlockParams::init("s", m, {OuterOpKind::Add}, rng);
  for (auto& [kind, head] : block.heads) head.w_v.value.fill(0.0);
  Tape t;
  const Tensor x = Tensor::vector({1, -2, 3, 0.5, 4});
  EXPECT_EQ(foaa_self_attention(block, t.constant(x)).value(), x);
}

TEST(SelfAttention, AllOperatorsOnZeroInputGiveZero) {
  const std::size_t m = 4;
  Rng rng(2);
  FoaaBlockParams block = FoaaBlockParams::init("s", m, {kAllOuterOps.begin(), kAllOuterOps.end()}, rng);
  for (auto& [kind, head] : block.heads) head.w_v.value.fill(0.0);
  Tape t;
  const Tensor y = foaa_self_attention(block, t.constant(Tensor({m}))).value();
  EXPECT_TRUE(y.all_finite());
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(SelfAttention, EmptyBlockIsRejected) {
  FoaaBlockParams block;
  block.dim = 3;
  Tape t;
  EXPECT_THROW(foaa_self_attention(block, t.constant(Tensor({3}))), ConfigError);
}

TEST(CrossAttention, ZeroValueProjectionsLeaveSkips) {
  const std::size_t m = 6;
  Rng rng(3);
  const std::vector<OuterOpKind> ops(kAllOuterOps.begin(), kAllOuterOps.end());
  FoaaBlockParams ab = FoaaBlockParams::init("ab", m, ops, rng), ba = FoaaBlockParams::init("ba", m, ops, rng);
  for (auto* b : {&ab, &ba})
    for (auto& [kind, head] : b->heads) head.w_v.value.fill(0.0);
  const Tensor xa = uniform_tensor({m}, 1.0, rng), xb = uniform_tensor({m}, 1.0, rng);
  Tape t;
  const Tensor y = foaa_cross_attention(ab, ba, t.constant(xa), t.constant(xb)).value();
  for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(y[i], xa[i] + xb[i], 1e-15);
}

TEST(CrossAttention, SingleDirectionReducesToOneHeadPlusSkips) {
  const std::size_t m = 5;
  Rng rng(4);
  FoaaBlockParams ab = FoaaBlockParams::init("ab", m, {OuterOpKind::Add}, rng);
  FoaaBlockParams ba = FoaaBlockParams::init("ba", m, {OuterOpKind::Add}, rng);
  const Tensor xa = uniform_tensor({m}, 1.0, rng), xb = uniform_tensor({m}, 1.0, rng);
  Tape t;
  Var va = t.constant(xa), vb = t.constant(xb);
  const Tensor y = foaa_cross_attention(ab, ba, va, vb, CrossDirections{true, false}).value();
  const Tensor h = attention_score(OuterOpKind::Add, ab.heads.at(OuterOpKind::Add), va, vb, vb).value();
  for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(y[i], h[i] + xa[i] + xb[i], 1e-14);
}

TEST(FusionHead, ZeroWeightsGiveBias) {
  Rng rng(5);
  FusionHeadParams p = FusionHeadParams::init("head", 4, 3, rng);
  p.fc.value.fill(0.0);
  p.classifier.value.fill(0.0);
  p.bias.value = Tensor::vector({0.1, -0.2, 0.3});
  Tape t;
  EXPECT_EQ(fusion_head(p, t.constant(Tensor::vector({1, 2, 3, 4}))).value(), p.bias.value);
}

TEST(FusionHead, OneHotClassifierSelectsEntries) {
  Rng rng(6);
  FusionHeadParams p = FusionHeadParams::init("head", 4, 2, rng);
  p.fc.value = identity(4);
  p.fc_bias.value.fill(0.0);
  p.bias.value.fill(0.0);
  p.classifier.value = Tensor::matrix({{0, 0}, {0, 1}, {1, 0}, {0, 0}});
  Tape t;
  EXPECT_EQ(fusion_head(p, t.constant(Tensor::vector({1, 2, 3, 4}))).value(), Tensor::vector({3, 2}));
}

TEST(DirectOuterFusion, AddWithOnesShiftsByOne) {
  Tape t;
  const Tensor y = direct_outer_fusion(t.constant(Tensor::vector({1, -2, 5})), t.constant(Tensor::vector({1, 1, 1})),
                                       {OuterOpKind::Add})
                       .value();
  EXPECT_EQ(y, Tensor::vector({2, -1, 6}));
}

TEST(DirectOuterFusion, MulOfZeroIsZero) {
  Tape t;
  const Tensor y =
      direct_outer_fusion(t.constant(Tensor({3})), t.constant(Tensor::vector({4, 5, 6})), {OuterOpKind::Mul}).value();
  EXPECT_EQ(y, Tensor({3}));
}

TEST(DirectOuterFusion, MatchesDoubleLoop) {
  std::mt19937_64 rng(12);
  const std::size_t m = 20;
  const Tensor a = test::random_tensor({m}, rng), b = test::random_tensor({m}, rng);
  Tape t;
  const Tensor y = direct_outer_fusion(t.constant(a), t.constant(b)).value();
  for (std::size_t i = 0; i < m; ++i) {
    double want = 0.0;
    for (OuterOpKind kind : kAllOuterOps) {
      double row = 0.0;
      for (std::size_t j = 0; j < m; ++j) row += oracle_entry(kind, a[i], b[j], 1e-6);
      want += row / static_cast<double>(m);
    }
    EXPECT_NEAR(y[i], want, 1e-12);
  }
}

TEST(OuterOpNames, ParseBothSpellings) {
  EXPECT_EQ(parse_outer_op("add"), OuterOpKind::Add);
  EXPECT_EQ(parse_outer_op("od"), OuterOpKind::Div);
  EXPECT_FALSE(parse_outer_op("pow").has_value());
}
