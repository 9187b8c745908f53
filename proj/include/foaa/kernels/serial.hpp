#pragma once

// Reference kernels: plain loops, no threading. The parallel kernels must agree
// with these bit-for-bit on the same inputs; tests and benchmarks use them as
// the baseline.

#include <cstddef>
#include <span>

#include "foaa/outer_op_kind.hpp"

namespace foaa::kernels::serial {

// c (m×n) = op(a) · op(b), with op(a) m×k and op(b) k×n. a is stored k×m when
// trans_a, b is stored n×k when trans_b. When accumulate, c += result.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate);

// out (m×n) with out[i*n + j] = q[i] ∘ k[j].
void outer(OuterOpKind kind, std::span<const double> q, std::span<const double> k,
           double eps, std::span<double> out);

void softmax_rows(std::size_t rows, std::size_t cols, std::span<const double> x,
                  std::span<double> out);

}  // namespace foaa::kernels::serial
