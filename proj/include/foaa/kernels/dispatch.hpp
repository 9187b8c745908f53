#pragma once

#include <cstddef>
#include <span>

#include "foaa/kernels/parallel.hpp"
#include "foaa/kernels/serial.hpp"

namespace foaa::kernels {

// Work (in multiply-adds) below which threading costs more than it saves.
inline constexpr std::size_t kParallelThreshold = std::size_t{1} << 16;

inline void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
                 std::span<const double> a, std::span<const double> b, std::span<double> c,
                 bool accumulate) {
  if (m * n * k >= kParallelThreshold)
    parallel::gemm(trans_a, trans_b, m, n, k, a, b, c, accumulate);
  else
    serial::gemm(trans_a, trans_b, m, n, k, a, b, c, accumulate);
}

inline void outer(OuterOpKind kind, std::span<const double> q, std::span<const double> k,
                  double eps, std::span<double> out) {
  if (q.size() * k.size() >= kParallelThreshold)
    parallel::outer(kind, q, k, eps, out);
  else
    serial::outer(kind, q, k, eps, out);
}

inline void softmax_rows(std::size_t rows, std::size_t cols, std::span<const double> x,
                         std::span<double> out) {
  if (rows * cols >= kParallelThreshold)
    parallel::softmax_rows(rows, cols, x, out);
  else
    serial::softmax_rows(rows, cols, x, out);
}

}  // namespace foaa::kernels
