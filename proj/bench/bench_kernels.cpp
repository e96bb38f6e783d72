// Serial reference vs OpenMP kernels, and asm vs easm per-iteration cost.
#include <benchmark/benchmark.h>

#include <random>

#include "mrc/kernels.hpp"
#include "mrc/objective.hpp"
#include "mrc/solver.hpp"

using namespace mrc;

namespace {

DenseMatrix random_matrix(std::size_t rows, std::size_t cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  DenseMatrix m(rows, cols);
  for (double& v : m.data()) v = n(rng);
  return m;
}

Vector random_vector(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  Vector v(n);
  for (double& x : v) x = d(rng);
  return v;
}

void BM_matvec(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const bool serial = state.range(1) != 0;
  const DenseMatrix a = random_matrix(n, n, 1);
  const Vector x = random_vector(n, 2);
  Vector out(n);
  for (auto _ : state) {
    if (serial) kernels::matvec_serial(a, x, {}, out);
    else kernels::matvec(a, x, {}, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_matvec)->ArgsProduct({{256, 1024, 2048}, {1, 0}})->ArgNames({"n", "serial"});

void BM_gram(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const bool serial = state.range(1) != 0;
  const DenseMatrix a = random_matrix(n, 200, 3);
  for (auto _ : state) {
    DenseMatrix g = serial ? kernels::gram_serial(a) : kernels::gram(a);
    benchmark::DoNotOptimize(g.data().data());
  }
}
BENCHMARK(BM_gram)->ArgsProduct({{128, 512}, {1, 0}})->ArgNames({"rows", "serial"})->Unit(benchmark::kMillisecond);

void BM_structured_gram(benchmark::State& state) {
  const auto pieces = static_cast<std::size_t>(state.range(0));
  const bool serial = state.range(1) != 0;
  const std::size_t instances = 100, classes = 3;
  const DenseMatrix psi = random_matrix(instances, 50, 4);
  const DenseMatrix k = kernels::gram(psi);
  std::vector<std::size_t> inst(pieces);
  for (std::size_t r = 0; r < pieces; ++r) inst[r] = r % instances;
  const DenseMatrix w = random_matrix(pieces, classes, 5);
  for (auto _ : state) {
    DenseMatrix g = serial ? kernels::structured_gram_serial(k, inst, w) : kernels::structured_gram(k, inst, w);
    benchmark::DoNotOptimize(g.data().data());
  }
}
BENCHMARK(BM_structured_gram)
    ->ArgsProduct({{700, 2000}, {1, 0}})
    ->ArgNames({"pieces", "serial"})
    ->Unit(benchmark::kMillisecond);

void BM_scaled_transpose(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const bool serial = state.range(1) != 0;
  const DenseMatrix a = random_matrix(n, n, 6);
  const Vector s = random_vector(n, 7);
  for (auto _ : state) {
    DenseMatrix t = serial ? kernels::scaled_transpose_serial(a, s) : kernels::scaled_transpose(a, s);
    benchmark::DoNotOptimize(t.data().data());
  }
}
BENCHMARK(BM_scaled_transpose)->ArgsProduct({{512, 2048}, {1, 0}})->ArgNames({"n", "serial"});

// Bounded random problem: f(mu) = lambda'|mu| + max(F mu + b).
PiecewiseLinearProblem random_problem(std::size_t pieces, std::size_t dim) {
  PiecewiseLinearProblem p;
  p.F = random_matrix(pieces, dim, 8);
  p.b = random_vector(pieces, 9);
  p.a.assign(dim, 0.0);
  p.lambda.assign(dim, 0.5);
  return p;
}

// Solver cost per iteration; the precompute of easm is included.
void BM_solver(benchmark::State& state) {
  const bool incremental = state.range(0) != 0;
  const PiecewiseLinearProblem p = random_problem(300, 1000);
  SolverConfig c;
  c.max_iters = 2000;
  c.method = incremental ? SolverMethod::easm : SolverMethod::asm_basic;
  for (auto _ : state) {
    SolverRun r = incremental ? solve_easm(p, c) : solve_asm(p, c);
    benchmark::DoNotOptimize(r.best_value);
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * c.max_iters));
}
BENCHMARK(BM_solver)->Arg(0)->Arg(1)->ArgName("easm")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
