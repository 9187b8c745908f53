#include "foaa/kernels/serial.hpp"

#include "kernel_rows.hpp"

namespace foaa::kernels::serial {

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  detail::gemm_rows(0, m, trans_a, trans_b, m, n, k, a.data(), b.data(), c.data(), accumulate);
}

void outer(OuterOpKind kind, std::span<const double> q, std::span<const double> k, double eps,
           std::span<double> out) {
  for (std::size_t i = 0; i < q.size(); ++i)
    detail::outer_row(i, kind, q.data(), k.data(), k.size(), eps, out.data());
}

void softmax_rows(std::size_t rows, std::size_t cols, std::span<const double> x,
                  std::span<double> out) {
  for (std::size_t i = 0; i < rows; ++i) detail::softmax_row(i, cols, x.data(), out.data());
}

}  // namespace foaa::kernels::serial
