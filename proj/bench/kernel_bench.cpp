// Serial reference kernels against their OpenMP counterparts at the shapes the
// training loop uses (batch 64, visual width 256, latent 100/200).

#include <random>

#include <benchmark/benchmark.h>

#include "synse/kernels.hpp"

namespace {

using synse::Matrix;
namespace k = synse::kernels;

Matrix random_matrix(std::size_t r, std::size_t c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Matrix m(r, c);
  for (double& v : m.values()) v = g(rng);
  return m;
}

template <Matrix (*Gemm)(const Matrix&, const Matrix&)>
void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 256, 1), b = random_matrix(256, 200, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Gemm(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * 256 * 200));
}

template <Matrix (*GemmTn)(const Matrix&, const Matrix&)>
void BM_GemmTn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 256, 3), b = random_matrix(n, 200, 4);
  for (auto _ : state) benchmark::DoNotOptimize(GemmTn(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * 256 * 200));
}

template <Matrix (*GemmNt)(const Matrix&, const Matrix&)>
void BM_GemmNt(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random_matrix(n, 200, 5), b = random_matrix(256, 200, 6);
  for (auto _ : state) benchmark::DoNotOptimize(GemmNt(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * 256 * 200));
}

}  // namespace

BENCHMARK(BM_Gemm<k::serial::gemm>)->Name("gemm/serial")->Arg(64)->Arg(1024);
BENCHMARK(BM_Gemm<k::parallel::gemm>)->Name("gemm/parallel")->Arg(64)->Arg(1024);
BENCHMARK(BM_GemmTn<k::serial::gemm_tn>)->Name("gemm_tn/serial")->Arg(64)->Arg(1024);
BENCHMARK(BM_GemmTn<k::parallel::gemm_tn>)->Name("gemm_tn/parallel")->Arg(64)->Arg(1024);
BENCHMARK(BM_GemmNt<k::serial::gemm_nt>)->Name("gemm_nt/serial")->Arg(64)->Arg(1024);
BENCHMARK(BM_GemmNt<k::parallel::gemm_nt>)->Name("gemm_nt/parallel")->Arg(64)->Arg(1024);

BENCHMARK_MAIN();
