#include <cstddef>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "glia/kernels.hpp"

namespace {

namespace k = glia::kernels;

std::vector<double> filled(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

template <auto Gemm>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = filled(n * n, 1);
  const auto b = filled(n * n, 2);
  std::vector<double> c(n * n);
  for (auto _ : state) {
    Gemm(a.data(), b.data(), c.data(), n, n, n, false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <auto Softmax>
void BM_Softmax(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t len = 257;
  const auto in = filled(rows * len, 3);
  std::vector<double> out(rows * len);
  for (auto _ : state) {
    Softmax(in.data(), out.data(), rows, len, 1);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows * len));
}

template <auto LayerNorm>
void BM_LayerNorm(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const std::size_t cols = 768;
  const auto x = filled(rows * cols, 4);
  const std::vector<double> gain(cols, 1.0), bias(cols, 0.0);
  std::vector<double> y(rows * cols), xhat(rows * cols), rstd(rows);
  for (auto _ : state) {
    LayerNorm(x.data(), gain.data(), bias.data(), y.data(), xhat.data(), rstd.data(), rows, cols,
              1e-6);
    benchmark::DoNotOptimize(y.data());
  }
}

BENCHMARK(BM_Gemm<k::serial::gemm>)->Name("gemm/serial")->Arg(64)->Arg(197)->Arg(384);
BENCHMARK(BM_Gemm<k::omp::gemm>)->Name("gemm/omp")->Arg(64)->Arg(197)->Arg(384);
BENCHMARK(BM_Gemm<k::serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(197)->Arg(384);
BENCHMARK(BM_Gemm<k::omp::gemm_nt>)->Name("gemm_nt/omp")->Arg(197)->Arg(384);
BENCHMARK(BM_Softmax<k::serial::softmax>)->Name("softmax/serial")->Arg(64)->Arg(12 * 197);
BENCHMARK(BM_Softmax<k::omp::softmax>)->Name("softmax/omp")->Arg(64)->Arg(12 * 197);
BENCHMARK(BM_LayerNorm<k::serial::layer_norm>)->Name("layer_norm/serial")->Arg(197)->Arg(1576);
BENCHMARK(BM_LayerNorm<k::omp::layer_norm>)->Name("layer_norm/omp")->Arg(197)->Arg(1576);

}  // namespace

BENCHMARK_MAIN();
