#pragma once

// Bodies shared by the serial and OpenMP kernels. Each works on a range of
// output rows and fixes the floating-point operation order per output
// element, so splitting the range across threads changes nothing numerically.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

#include "foaa/outer_op_kind.hpp"

namespace foaa::kernels::detail {

// Four interleaved partial sums, combined pairwise.
inline double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t p = 0;
  for (; p + 4 <= n; p += 4) {
    s0 += a[p] * b[p];
    s1 += a[p + 1] * b[p + 1];
    s2 += a[p + 2] * b[p + 2];
    s3 += a[p + 3] * b[p + 3];
  }
  for (; p < n; ++p) s0 += a[p] * b[p];
  return (s0 + s1) + (s2 + s3);
}

inline void gemm_rows(std::size_t i0, std::size_t i1, bool trans_a, bool trans_b, std::size_t m, std::size_t n,
                      std::size_t k, const double* a, const double* b, double* c, bool accumulate) {
  if (n == 1 && !trans_a) {
    for (std::size_t i = i0; i < i1; ++i) {
      const double s = dot(a + i * k, b, k);
      c[i] = accumulate ? c[i] + s : s;
    }
    return;
  }
  if (n == 1) {
    // c[i] += sum_p a[p][i] * b[p], accumulated in p order.
    if (!accumulate) std::fill(c + i0, c + i1, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double bp = b[p];
      const double* arow = a + p * m;
      for (std::size_t i = i0; i < i1; ++i) c[i] += arow[i] * bp;
    }
    return;
  }
  for (std::size_t i = i0; i < i1; ++i) {
    double* crow = c + i * n;
    if (!accumulate) std::fill(crow, crow + n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = trans_a ? a[p * m + i] : a[i * k + p];
      if (trans_b) {
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * b[j * k + p];
      } else {
        const double* brow = b + p * n;
        for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
      }
    }
  }
}

inline void outer_row(std::size_t i, OuterOpKind kind, const double* q, const double* k,
                      std::size_t n, double eps, double* out) {
  const double qi = q[i];
  double* row = out + i * n;
  switch (kind) {
    case OuterOpKind::Add:
      for (std::size_t j = 0; j < n; ++j) row[j] = qi + k[j];
      break;
    case OuterOpKind::Sub:
      for (std::size_t j = 0; j < n; ++j) row[j] = qi - k[j];
      break;
    case OuterOpKind::Mul:
      for (std::size_t j = 0; j < n; ++j) row[j] = qi * k[j];
      break;
    case OuterOpKind::Div:
      for (std::size_t j = 0; j < n; ++j) row[j] = qi / division_guard(k[j], eps);
      break;
  }
}

inline void softmax_row(std::size_t i, std::size_t cols, const double* x, double* out) {
  const double* xr = x + i * cols;
  double* yr = out + i * cols;
  const double mx = *std::max_element(xr, xr + cols);
  double total = 0.0;
  for (std::size_t j = 0; j < cols; ++j) {
    yr[j] = std::exp(xr[j] - mx);
    total += yr[j];
  }
  const double inv = 1.0 / total;
  for (std::size_t j = 0; j < cols; ++j) yr[j] *= inv;
}

}  // namespace foaa::kernels::detail
