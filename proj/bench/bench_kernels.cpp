#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "foaa/kernels/parallel.hpp"
#include "foaa/kernels/serial.hpp"

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

template <bool Parallel>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_values(n * n, 1), b = random_values(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    if constexpr (Parallel)
      foaa::kernels::parallel::gemm(false, false, n, n, n, a, b, c, false);
    else
      foaa::kernels::serial::gemm(false, false, n, n, n, a, b, c, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}

template <bool Parallel>
void BM_Outer(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto kind = static_cast<foaa::OuterOpKind>(state.range(1));
  const auto q = random_values(m, 3), k = random_values(m, 4);
  std::vector<double> out(m * m);
  for (auto _ : state) {
    if constexpr (Parallel)
      foaa::kernels::parallel::outer(kind, q, k, 1e-6, out);
    else
      foaa::kernels::serial::outer(kind, q, k, 1e-6, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * m * m);
}

template <bool Parallel>
void BM_Softmax(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto x = random_values(m * m, 5);
  std::vector<double> out(m * m);
  for (auto _ : state) {
    if constexpr (Parallel)
      foaa::kernels::parallel::softmax_rows(m, m, x, out);
    else
      foaa::kernels::serial::softmax_rows(m, m, x, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * m * m);
}

}  // namespace

BENCHMARK(BM_Gemm<false>)->Arg(64)->Arg(256);
BENCHMARK(BM_Gemm<true>)->Arg(64)->Arg(256);
BENCHMARK(BM_Outer<false>)->ArgsProduct({{64, 512}, {0, 1, 2, 3}});
BENCHMARK(BM_Outer<true>)->ArgsProduct({{64, 512}, {0, 1, 2, 3}});
BENCHMARK(BM_Softmax<false>)->Arg(64)->Arg(512);
BENCHMARK(BM_Softmax<true>)->Arg(64)->Arg(512);

BENCHMARK_MAIN();
