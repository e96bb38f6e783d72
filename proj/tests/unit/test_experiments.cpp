#include <doctest.h>

#include <cmath>

#include "mrc/errors.hpp"
#include "mrc/experiments.hpp"
#include "support.hpp"

using namespace mrc;

namespace {

TrainOptions exact_options() {
  TrainOptions o;
  o.solver.method = SolverMethod::lp;
  return o;
}

}  // namespace

TEST_CASE("lambda sweep") {
  const auto data = testing::blobs(45, 3, 2, 2.0, 23);
  const std::vector<double> grid{0.0, 0.2, 0.5, 1.0};
  const auto rows = sweep_lambda(data, fourier_spec(2, 3, 4, 1.0, 23), exact_options(), grid, 3, 7);
  REQUIRE(rows.size() == grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CHECK(rows[g].lambda0 == grid[g]);
    CHECK(rows[g].lower <= rows[g].upper + 1e-9);
    CHECK(rows[g].err_det <= 2.0 * rows[g].risk_rand + 1e-12);
    if (g > 0) CHECK(rows[g].upper >= rows[g - 1].upper - 1e-6);
  }
  CHECK_THROWS_AS(sweep_lambda(data, fourier_spec(2, 3, 4, 1.0, 23), exact_options(), {}, 3, 7), InputError);
  CHECK_THROWS_AS(sweep_lambda(data, fourier_spec(2, 3, 4, 1.0, 23), exact_options(), {-0.1}, 3, 7), InputError);

  // Same seed, same table.
  const auto again = sweep_lambda(data, fourier_spec(2, 3, 4, 1.0, 23), exact_options(), grid, 3, 7);
  for (std::size_t g = 0; g < grid.size(); ++g) CHECK(again[g].upper == rows[g].upper);
}

TEST_CASE("reduced anchor study") {
  const auto data = testing::blobs(40, 2, 2, 2.0, 29);
  const auto pool = testing::blobs(60, 2, 2, 2.0, 30).instances;
  TrainOptions o = exact_options();
  o.compute_lower = false;
  const std::vector<std::size_t> sizes{5, 30, 60};
  const ReduceStudy study = reduce_study(data, pool, fourier_spec(2, 2, 3, 1.0, 29), o, sizes, 3, 4);
  REQUIRE(study.runs.size() == 9);
  REQUIRE(study.summary.size() == 3);
  for (const ReduceRun& r : study.runs) {
    if (r.s == 60) CHECK(r.gap <= 1e-9);
    CHECK(r.upper >= 0.0);
  }
  CHECK(study.summary[2].mean_gap <= 1e-9);
  CHECK(study.summary[0].epsilon > study.summary[2].epsilon);
  CHECK(study.implicit_sizes.empty());
  CHECK_THROWS_AS(reduce_study(data, pool, fourier_spec(2, 2, 3, 1.0, 29), o, {61}, 1, 4), InputError);
  CHECK_THROWS_AS(reduce_study(data, pool, fourier_spec(2, 2, 3, 1.0, 29), o, {}, 1, 4), InputError);
}

TEST_CASE("reduced anchor study falls back above the memory budget") {
  const auto data = testing::blobs(40, 2, 2, 2.0, 29);
  const auto pool = testing::blobs(60, 2, 2, 2.0, 30).instances;
  TrainOptions o;
  o.compute_lower = false;
  o.solver.max_iters = 300;
  o.solver.restart_period = 100;
  o.solver.gram_budget_bytes = 8 * 100 * 100;  // room for 33 instances with three pieces each
  const ReduceStudy study = reduce_study(data, pool, fourier_spec(2, 2, 3, 1.0, 29), o, {10, 60}, 2, 4);
  CHECK(study.implicit_sizes == std::vector<std::size_t>{60});
  for (const ReduceRun& r : study.runs)
    if (r.s == 60) CHECK(r.gap <= 1e-9);
}

TEST_CASE("percentiles and the default scale grid") {
  CHECK(percentile({3.0, 1.0, 2.0}, 50.0) == 2.0);
  CHECK(percentile({0.0, 10.0}, 10.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(percentile({}, 50.0), InputError);

  DenseMatrix x(3, 1);
  x(1, 0) = 1.0;
  x(2, 0) = 3.0;  // distances 1, 2, 3
  const auto grid = default_sigma_grid(x, 5);
  REQUIRE(grid.size() == 5);
  CHECK(grid.front() == doctest::Approx(1.2));
  CHECK(grid.back() == doctest::Approx(2.8));
  CHECK(default_sigma_grid(testing::blobs(30, 2, 2, 1.0, 1).instances).size() == 20);
  CHECK_THROWS_AS(default_sigma_grid(DenseMatrix(4, 2, 1.0)), InputError);
  CHECK_THROWS_AS(default_sigma_grid(DenseMatrix(1, 2)), InputError);
}

TEST_CASE("model selection") {
  const auto data = testing::blobs(40, 2, 2, 2.5, 37);
  TrainOptions o = exact_options();
  const FeatureMapSpec spec = fourier_spec(2, 2, 3, 1.0, 37);
  const SelectionReport one = model_select(data, spec, o, {0.7}, 3, 0.25, 5);
  REQUIRE(one.splits.size() == 3);
  for (const SelectionSplit& s : one.splits) {
    CHECK(s.selected == 0);
    CHECK(s.sigmas == std::vector<double>{0.7});
    CHECK(s.lower <= s.upper + 1e-9);
  }
  const SelectionReport many = model_select(data, spec, o, {2.0, 0.5, 1.0}, 2, 0.25, 5);
  for (const SelectionSplit& s : many.splits) {
    CHECK(s.sigmas == std::vector<double>{0.5, 1.0, 2.0});
    for (double u : s.uppers) CHECK(s.uppers[s.selected] <= u);
    CHECK(s.upper == doctest::Approx(s.uppers[s.selected]).epsilon(1e-9));
  }
  CHECK_THROWS_AS(model_select(data, spec, o, {0.0}, 2, 0.25, 5), InputError);
  CHECK_THROWS_AS(model_select(data, spec, o, {1.0}, 0, 0.25, 5), InputError);
  FeatureMapSpec identity;
  identity.kind = FeatureKind::identity;
  CHECK_THROWS_AS(model_select(data, identity, o, {1.0}, 2, 0.25, 5), InputError);
}

TEST_CASE("solver comparison") {
  const auto data = testing::blobs(20, 2, 2, 2.0, 41);
  const FeatureMap fm(fourier_spec(2, 2, 4, 1.0, 41));
  const UncertaintySet set = estimate_uncertainty(data.instances, data.labels, fm, {});
  const PiecewiseLinearProblem p = build_learning_problem(set, data.instances, fm);
  SolverConfig base;
  base.max_iters = 500;
  base.restart_period = 100;
  const BenchResult r = bench_solvers(p, base, {SolverMethod::asm_basic, SolverMethod::easm});
  REQUIRE(r.runs.size() == 2);
  REQUIRE(r.has_reference);
  for (const SolverRun& run : r.runs) {
    CHECK(run.best_value >= r.reference_value - 1e-9);
    CHECK_FALSE(run.trace.empty());
  }
}
