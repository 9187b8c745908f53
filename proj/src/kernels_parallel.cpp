#include "foaa/kernels/parallel.hpp"

#include <algorithm>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "kernel_rows.hpp"

namespace foaa::kernels::parallel {

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  // Contiguous blocks of rows per thread.
  constexpr std::int64_t kBlock = 16;
  const auto blocks = static_cast<std::int64_t>((m + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static)
  for (std::int64_t blk = 0; blk < blocks; ++blk) {
    const auto i0 = static_cast<std::size_t>(blk * kBlock);
    const std::size_t i1 = std::min(m, i0 + static_cast<std::size_t>(kBlock));
    detail::gemm_rows(i0, i1, trans_a, trans_b, m, n, k, a.data(), b.data(), c.data(), accumulate);
  }
}

void outer(OuterOpKind kind, std::span<const double> q, std::span<const double> k, double eps,
           std::span<double> out) {
  const auto rows = static_cast<std::int64_t>(q.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < rows; ++i)
    detail::outer_row(static_cast<std::size_t>(i), kind, q.data(), k.data(), k.size(), eps,
                      out.data());
}

void softmax_rows(std::size_t rows, std::size_t cols, std::span<const double> x,
                  std::span<double> out) {
  const auto n = static_cast<std::int64_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    detail::softmax_row(static_cast<std::size_t>(i), cols, x.data(), out.data());
}

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace foaa::kernels::parallel
