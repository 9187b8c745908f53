#pragma once

// OpenMP versions of the serial kernels. Rows are distributed across threads;
// each output element is computed by exactly one thread with the same
// summation order as the serial kernel, so results are bit-identical.
// Without OpenMP these compile to the serial loops.

#include <cstddef>
#include <span>

#include "foaa/outer_op_kind.hpp"

namespace foaa::kernels::parallel {

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate);

void outer(OuterOpKind kind, std::span<const double> q, std::span<const double> k,
           double eps, std::span<double> out);

void softmax_rows(std::size_t rows, std::size_t cols, std::span<const double> x,
                  std::span<double> out);

bool openmp_enabled();
int max_threads();

}  // namespace foaa::kernels::parallel
