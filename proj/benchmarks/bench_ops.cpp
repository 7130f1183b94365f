#include "fastl1/dictionary.hpp"
#include "fastl1/screening.hpp"
#include "fastl1/solver.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace fastl1;

namespace {

DenseDictionary make_dense(Index n, Index k) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(n, k);
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < n; ++i) m(i, j) = gauss(rng);
    m.col(j) /= m.col(j).norm();
  }
  return DenseDictionary(std::move(m));
}

Vector make_vector(Index n) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = gauss(rng);
  return v;
}

}  // namespace

static void BM_dense_matvec(benchmark::State& state) {
  const auto side = static_cast<Index>(state.range(0));
  const DenseDictionary d = make_dense(side * side, 4 * side * side);
  const Vector x = make_vector(d.cols());
  for (auto _ : state) {
    benchmark::DoNotOptimize(d.apply(x));
  }
  state.SetItemsProcessed(state.iterations() * d.rows() * d.cols());
}
BENCHMARK(BM_dense_matvec)->Arg(16)->Arg(32);

static void BM_sukro_matvec(benchmark::State& state) {
  const auto side = static_cast<Index>(state.range(0));
  const int n_kron = static_cast<int>(state.range(1));
  const DenseDictionary d = make_dense(side * side, 4 * side * side);
  const ApproxSequence seq = build_sukro_sequence(d, {n_kron});
  const Vector x = make_vector(d.cols());
  for (auto _ : state) {
    benchmark::DoNotOptimize(seq.dicts[0].op->apply(x));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<int64_t>(seq.dicts[0].op->matvec_flops()));
}
BENCHMARK(BM_sukro_matvec)->Args({16, 5})->Args({32, 5})->Args({32, 10});

static void BM_screen_pass(benchmark::State& state) {
  const auto k = static_cast<Index>(state.range(0));
  const Vector dots = make_vector(k).cwiseAbs();
  const Vector eps = Vector::Constant(k, 0.05);
  const Vector norms = Vector::Ones(k);
  for (auto _ : state) {
    benchmark::DoNotOptimize(screen_precomputed(dots, eps, norms, norms, 1.3, 0.4));
  }
  state.SetItemsProcessed(state.iterations() * k);
}
BENCHMARK(BM_screen_pass)->Arg(1 << 10)->Arg(1 << 14);

static void BM_soft_threshold(benchmark::State& state) {
  const auto k = static_cast<Index>(state.range(0));
  const Vector z = make_vector(k);
  for (auto _ : state) {
    benchmark::DoNotOptimize(soft_threshold(z, 0.1));
  }
  state.SetItemsProcessed(state.iterations() * k);
}
BENCHMARK(BM_soft_threshold)->Arg(1 << 14);

BENCHMARK_MAIN();
