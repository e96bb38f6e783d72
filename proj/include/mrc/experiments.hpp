#ifndef MRC_EXPERIMENTS_HPP
#define MRC_EXPERIMENTS_HPP

// Multi-run studies behind the sweep, reduced-set, solver-benchmark and
// model-selection commands. Independent runs execute concurrently; results
// are collected in grid order so output does not depend on scheduling.

#include <cstdint>
#include <string>
#include <vector>

#include "mrc/classifier.hpp"
#include "mrc/dataset.hpp"
#include "mrc/features.hpp"
#include "mrc/solver.hpp"

namespace mrc {

struct SweepRow {
  double lambda0 = 0.0;
  double upper = 0.0;
  double lower = 0.0;
  double risk_rand = 0.0;
  double err_det = 0.0;
};

/// For each lambda0, averages over stratified folds the bounds of the model
/// trained on the other folds and its errors on the held-out fold.
std::vector<SweepRow> sweep_lambda(const Dataset& data, const FeatureMapSpec& spec, const TrainOptions& options,
                                   const std::vector<double>& grid, std::size_t folds, std::uint64_t seed);

struct ReduceRun {
  std::size_t s = 0;
  std::size_t repetition = 0;
  double upper = 0.0;
  double lower = 0.0;
  double gap = 0.0;  // |upper - upper_full|
  bool repaired = false;
};

struct ReduceSummary {
  std::size_t s = 0;
  double mean_upper = 0.0, std_upper = 0.0;
  double mean_lower = 0.0, std_lower = 0.0;
  double mean_gap = 0.0, std_gap = 0.0, median_gap = 0.0;
  double epsilon = 0.0;
  std::size_t repairs = 0;
};

struct ReduceStudy {
  double upper_full = 0.0;
  double lower_full = 0.0;
  bool full_repaired = false;
  /// Anchor sizes solved with implicit pieces because the Gram matrix of the
  /// incremental method would exceed the solver's memory budget.
  std::vector<std::size_t> implicit_sizes;
  std::vector<ReduceRun> runs;
  std::vector<ReduceSummary> summary;
};

/// tau and lambda come from `train`; the learning problem is then solved over
/// the whole `pool` and over random pool subsets of each size in `sizes`.
/// When the uncertainty set is empty over an anchor set it is widened by
/// ensure_feasible and the run is flagged. Anchor sets whose Gram matrix
/// exceeds config.gram_budget_bytes are solved with implicit pieces and listed
/// in implicit_sizes.
ReduceStudy reduce_study(const Dataset& train, const DenseMatrix& pool, const FeatureMapSpec& spec,
                         const TrainOptions& options, const std::vector<std::size_t>& sizes,
                         std::size_t repetitions, std::uint64_t seed);

struct BenchResult {
  std::vector<SolverRun> runs;
  bool has_reference = false;
  double reference_value = 0.0;  // exact LP optimum
  std::string reference_note;
};

/// Runs every method from the same initial point; adds the LP optimum when
/// the problem fits the exact solver's budget.
BenchResult bench_solvers(const PiecewiseLinearProblem& problem, const SolverConfig& base,
                          const std::vector<SolverMethod>& methods);

/// 20 evenly spaced values between the 10th and 90th percentiles of pairwise
/// Euclidean distances. Throws InputError when all distances are zero.
std::vector<double> default_sigma_grid(const DenseMatrix& normalized_instances, std::size_t count = 20);

/// Linear-interpolation percentile of `values` (q in [0, 100]).
double percentile(std::vector<double> values, double q);

struct SelectionSplit {
  std::size_t split = 0;
  std::vector<double> sigmas;
  std::vector<double> uppers;  // minimax risk per candidate
  std::size_t selected = 0;
  double upper = 0.0;
  double lower = 0.0;
  double risk_rand = 0.0;
  double err_det = 0.0;
};

struct SelectionReport {
  std::vector<SelectionSplit> splits;
  double mean_err_det = 0.0, std_err_det = 0.0;
  double mean_risk_rand = 0.0, std_risk_rand = 0.0;
  double mean_upper = 0.0, mean_lower = 0.0;
};

/// Per split: picks the kernel scale with the smallest minimax risk on the
/// training part (ties to the smaller scale), then evaluates on the test part.
/// An empty `sigmas` uses default_sigma_grid on each split's normalized training data.
SelectionReport model_select(const Dataset& data, const FeatureMapSpec& spec, const TrainOptions& options,
                             const std::vector<double>& sigmas, std::size_t splits, double test_fraction,
                             std::uint64_t seed);

}  // namespace mrc

#endif  // MRC_EXPERIMENTS_HPP
