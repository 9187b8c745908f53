#include <gtest/gtest.h>

#include <cmath>

#include "foaa/errors.hpp"
#include "foaa/kernels/dispatch.hpp"
#include "foaa/tape.hpp"
#include "test_support.hpp"

using namespace foaa;

namespace {

Tensor run_matmul(const Tensor& a, const Tensor& b) {
  Tape t;
  return matmul(t.constant(a), t.constant(b)).value();
}

Tensor run_softmax(const Tensor& x) {
  Tape t;
  return softmax_rows(t.constant(x)).value();
}

}  // namespace

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  const Tensor b = Tensor::matrix({{1, 2}, {3, 4}});
  EXPECT_EQ(run_matmul(Tensor::matrix({{1, 0}, {0, 1}}), b), b);
}

TEST(Matmul, ProjectorKeepsFirstRow) {
  const Tensor c = run_matmul(Tensor::matrix({{1, 0}, {0, 0}}), Tensor::matrix({{5}, {7}}));
  EXPECT_EQ(c, Tensor::matrix({{5}, {0}}));
}

TEST(Matmul, MatchesTripleLoop) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    const Tensor a = test::random_tensor({3, 4}, rng), b = test::random_tensor({4, 2}, rng);
    EXPECT_LE(max_abs_diff(run_matmul(a, b), test::naive_matmul(a, b)), 1e-12);
  }
}

TEST(Matmul, InnerDimensionMismatchThrows) {
  Tape t;
  EXPECT_THROW(matmul(t.constant(Tensor(Shape{2, 3})), t.constant(Tensor(Shape{2, 3}))), DimensionError);
}

TEST(Matmul, TransposedLayoutsMatchOracle) {
  std::mt19937_64 rng(5);
  const std::size_t m = 5, n = 3, k = 7;
  const Tensor a = test::random_tensor({m, k}, rng), b = test::random_tensor({k, n}, rng);
  Tensor at({k, m}), bt({n, k});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) at.at(p, i) = a.at(i, p);
  for (std::size_t p = 0; p < k; ++p)
    for (std::size_t j = 0; j < n; ++j) bt.at(j, p) = b.at(p, j);
  const Tensor want = test::naive_matmul(a, b);
  for (bool ta : {false, true})
    for (bool tb : {false, true}) {
      Tensor c({m, n});
      kernels::serial::gemm(ta, tb, m, n, k, (ta ? at : a).data(), (tb ? bt : b).data(), c.data(), false);
      EXPECT_LE(max_abs_diff(c, want), 1e-12) << ta << tb;
    }
}

TEST(Softmax, ZeroRowsAreUniform) {
  const Tensor y = run_softmax(Tensor::matrix({{0, 0}, {0, 0}}));
  for (double v : y.data()) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(Softmax, LogTwoClosedForm) {
  const Tensor y = run_softmax(Tensor::matrix({{std::log(2.0), 0.0}}));
  EXPECT_NEAR(y[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(y[1], 1.0 / 3.0, 1e-15);
}

TEST(Softmax, RowShiftInvariantAndRowsSumToOne) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int rep = 0; rep < 50; ++rep) {
    const Tensor x = test::random_tensor({4, 9}, rng, -5.0, 5.0);
    Tensor xs = x;
    for (std::size_t r = 0; r < 4; ++r) {
      const double c = shift(rng);
      for (std::size_t j = 0; j < 9; ++j) xs.at(r, j) += c;
    }
    const Tensor y = run_softmax(x);
    EXPECT_LE(max_abs_diff(y, run_softmax(xs)), 1e-9);
    for (std::size_t r = 0; r < 4; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < 9; ++j) s += y.at(r, j);
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(Softmax, LargeLogitsStayFinite) {
  const Tensor y = run_softmax(Tensor::matrix({{1000.0, -1000.0, 999.0}}));
  EXPECT_TRUE(y.all_finite());
  EXPECT_NEAR(y[0] + y[1] + y[2], 1.0, 1e-12);
}

TEST(Elementwise, HandArithmetic) {
  Tape t;
  EXPECT_EQ(add(t.constant(Tensor::vector({1, 2})), t.constant(Tensor::vector({0, 0}))).value(),
            Tensor::vector({1, 2}));
  const Var v = t.constant(Tensor::vector({3, -1, 7}));
  EXPECT_EQ(sub(v, v).value(), Tensor::vector({0, 0, 0}));
  EXPECT_EQ(mul(t.constant(Tensor::vector({2, 3})), t.constant(Tensor::vector({4, 5}))).value(),
            Tensor::vector({8, 15}));
}

TEST(Elementwise, ShapeMismatchThrows) {
  Tape t;
  EXPECT_THROW(add(t.constant(Tensor::vector({1, 2})), t.constant(Tensor::vector({1, 2, 3}))), DimensionError);
}

TEST(ParallelKernels, GemmBitIdenticalToSerial) {
  std::mt19937_64 rng(17);
  struct Case {
    std::size_t m, n, k;
  };
  for (Case c : {Case{64, 64, 64}, Case{100, 1, 700}, Case{257, 33, 19}, Case{3, 5, 2}}) {
    for (bool ta : {false, true})
      for (bool tb : {false, true}) {
        const Tensor a = test::random_tensor({c.m * c.k}, rng), b = test::random_tensor({c.k * c.n}, rng);
        Tensor cs = test::random_tensor({c.m * c.n}, rng);
        Tensor cp = cs;
        kernels::serial::gemm(ta, tb, c.m, c.n, c.k, a.data(), b.data(), cs.data(), true);
        kernels::parallel::gemm(ta, tb, c.m, c.n, c.k, a.data(), b.data(), cp.data(), true);
        EXPECT_EQ(cs, cp);
      }
  }
}

TEST(ParallelKernels, OuterAndSoftmaxBitIdenticalToSerial) {
  std::mt19937_64 rng(23);
  const std::size_t m = 300;
  const Tensor q = test::random_tensor({m}, rng), k = test::random_tensor({m}, rng);
  for (OuterOpKind kind : kAllOuterOps) {
    Tensor s({m * m}), p({m * m});
    kernels::serial::outer(kind, q.data(), k.data(), 1e-6, s.data());
    kernels::parallel::outer(kind, q.data(), k.data(), 1e-6, p.data());
    EXPECT_EQ(s, p);
    Tensor ss({m * m}), sp({m * m});
    kernels::serial::softmax_rows(m, m, s.data(), ss.data());
    kernels::parallel::softmax_rows(m, m, s.data(), sp.data());
    EXPECT_EQ(ss, sp);
  }
}

TEST(Tensor, RejectsBadShapes) {
  EXPECT_THROW(Tensor(Shape{2, 0}), DimensionError);
  EXPECT_THROW(Tensor(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  EXPECT_THROW(Tensor::vector({1, 2}).reshaped({3}), DimensionError);
}
