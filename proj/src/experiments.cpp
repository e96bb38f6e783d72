#include "mrc/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <numeric>
#include <random>

#include "mrc/errors.hpp"
#include "mrc/random.hpp"

namespace mrc {

namespace {

// Runs fn(0..n-1) across threads. If several jobs throw, the exception of the
// lowest index is rethrown so failures are reproducible.
template <typename Fn>
void for_each_job(std::size_t n, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      fn(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1); zero for fewer than two values.
double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

FeatureMapSpec resolve_spec(FeatureMapSpec spec, const DenseMatrix& x, std::size_t classes) {
  if (spec.kind == FeatureKind::identity) return identity_spec(x, classes, spec.constant_feature);
  spec.num_classes = classes;
  spec.input_dim = x.cols();
  return spec;
}

std::vector<std::size_t> complement(std::size_t n, const std::vector<std::size_t>& fold_of, std::size_t fold,
                                    bool inside) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i)
    if ((fold_of[i] == fold) == inside) out.push_back(i);
  return out;
}

// Whether the incremental solver's F F^T for an anchor of s instances would
// exceed the memory budget.
bool gram_exceeds_budget(std::size_t s, std::size_t classes, const SolverConfig& config) {
  if (config.method != SolverMethod::easm && config.method != SolverMethod::easm_restart) return false;
  if (classes > kMaxEnumeratedClasses) return false;
  const double p = static_cast<double>(s) * static_cast<double>((std::size_t{1} << classes) - 1);
  return p * p * sizeof(double) > static_cast<double>(config.gram_budget_bytes);
}

}  // namespace

std::vector<SweepRow> sweep_lambda(const Dataset& data, const FeatureMapSpec& spec, const TrainOptions& options,
                                   const std::vector<double>& grid, std::size_t folds, std::uint64_t seed) {
  if (grid.empty()) throw InputError("lambda0 grid is empty");
  for (double l : grid)
    if (!(l >= 0.0)) throw InputError("lambda0 values must be nonnegative");
  const std::vector<std::size_t> fold_of = stratified_folds(data, folds, derive_seed(seed, 0));
  struct Cell {
    double upper = 0.0, lower = 0.0, risk = 0.0, err = 0.0;
  };
  std::vector<Cell> cells(grid.size() * folds);
  for_each_job(cells.size(), [&](std::size_t job) {
    const std::size_t g = job / folds;
    const std::size_t f = job % folds;
    const auto train_idx = complement(data.n(), fold_of, f, false);
    const auto test_idx = complement(data.n(), fold_of, f, true);
    TrainOptions opts = options;
    opts.estimate.lambda0 = grid[g];
    const MrcModel model = train(data.subset(train_idx), spec, opts);
    const Evaluation e = evaluate(model, data.subset(test_idx));
    cells[job] = {model.minimax_risk, model.lower_bound.value_or(std::numeric_limits<double>::quiet_NaN()),
                  e.randomized_risk, e.deterministic_error};
  });
  std::vector<SweepRow> rows;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    SweepRow row;
    row.lambda0 = grid[g];
    for (std::size_t f = 0; f < folds; ++f) {
      const Cell& c = cells[g * folds + f];
      row.upper += c.upper;
      row.lower += c.lower;
      row.risk_rand += c.risk;
      row.err_det += c.err;
    }
    const double k = static_cast<double>(folds);
    row.upper /= k;
    row.lower /= k;
    row.risk_rand /= k;
    row.err_det /= k;
    rows.push_back(row);
  }
  return rows;
}

ReduceStudy reduce_study(const Dataset& train_set, const DenseMatrix& pool, const FeatureMapSpec& spec,
                         const TrainOptions& options, const std::vector<std::size_t>& sizes,
                         std::size_t repetitions, std::uint64_t seed) {
  if (sizes.empty()) throw InputError("instance-count grid is empty");
  if (repetitions == 0) throw InputError("repetitions must be positive");
  if (pool.cols() != train_set.d()) throw InputError("pool instances have the wrong dimension");
  for (std::size_t s : sizes) {
    if (s == 0 || s > pool.rows()) {
      throw InputError("instance count " + std::to_string(s) + " outside [1, " + std::to_string(pool.rows()) + "]");
    }
  }
  DenseMatrix x = train_set.instances;
  DenseMatrix pool_x = pool;
  if (options.normalize) {
    const NormalizationStats stats = fit_normalizer(train_set.instances);
    x = apply_normalizer(stats, train_set.instances);
    pool_x = apply_normalizer(stats, pool);
  }
  auto features = std::make_shared<const FeatureMap>(resolve_spec(spec, x, train_set.num_classes()));
  const UncertaintySet set = estimate_uncertainty(x, train_set.labels, *features, options.estimate);

  ReduceStudy study;
  {
    const UncertaintySet full_set = ensure_feasible(set, pool_x, *features);
    TrainOptions opts = options;
    if (gram_exceeds_budget(pool_x.rows(), features->num_classes(), options.solver)) {
      opts.implicit_pieces = true;
      study.implicit_sizes.push_back(pool_x.rows());
    }
    const MrcModel full = fit(full_set, pool_x, features, opts);
    study.upper_full = full.minimax_risk;
    study.lower_full = full.lower_bound.value_or(std::numeric_limits<double>::quiet_NaN());
    study.full_repaired = full_set.provenance.repaired;
  }

  for (std::size_t s : sizes)
    if (gram_exceeds_budget(s, features->num_classes(), options.solver) &&
        std::find(study.implicit_sizes.begin(), study.implicit_sizes.end(), s) == study.implicit_sizes.end())
      study.implicit_sizes.push_back(s);

  study.runs.resize(sizes.size() * repetitions);
  for_each_job(study.runs.size(), [&](std::size_t job) {
    const std::size_t s = sizes[job / repetitions];
    std::mt19937_64 rng(derive_seed(seed, job));
    std::vector<std::size_t> order(pool_x.rows());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Partial Fisher-Yates: the first s entries are a uniform random subset.
    for (std::size_t i = 0; i < s; ++i) {
      const auto j = i + static_cast<std::size_t>(uniform_index(rng, order.size() - i));
      std::swap(order[i], order[j]);
    }
    order.resize(s);
    std::sort(order.begin(), order.end());
    const DenseMatrix anchor = pool_x.select_rows(order);
    const UncertaintySet subset_set = ensure_feasible(set, anchor, *features);
    TrainOptions opts = options;
    opts.implicit_pieces = gram_exceeds_budget(s, features->num_classes(), options.solver);
    const MrcModel model = fit(subset_set, anchor, features, opts);
    ReduceRun& run = study.runs[job];
    run.s = s;
    run.repetition = job % repetitions;
    run.upper = model.minimax_risk;
    run.lower = model.lower_bound.value_or(std::numeric_limits<double>::quiet_NaN());
    run.gap = std::abs(run.upper - study.upper_full);
    run.repaired = subset_set.provenance.repaired;
  });

  for (std::size_t k = 0; k < sizes.size(); ++k) {
    std::vector<double> uppers, lowers, gaps;
    ReduceSummary sum;
    sum.s = sizes[k];
    for (std::size_t r = 0; r < repetitions; ++r) {
      const ReduceRun& run = study.runs[k * repetitions + r];
      uppers.push_back(run.upper);
      lowers.push_back(run.lower);
      gaps.push_back(run.gap);
      sum.repairs += run.repaired;
    }
    sum.mean_upper = mean_of(uppers);
    sum.std_upper = std_of(uppers);
    sum.mean_lower = mean_of(lowers);
    sum.std_lower = std_of(lowers);
    sum.mean_gap = mean_of(gaps);
    sum.std_gap = std_of(gaps);
    sum.median_gap = percentile(gaps, 50.0);
    sum.epsilon = epsilon_s(sizes[k], features->size(), features->num_classes(), options.estimate.delta);
    study.summary.push_back(sum);
  }
  return study;
}

BenchResult bench_solvers(const PiecewiseLinearProblem& problem, const SolverConfig& base,
                          const std::vector<SolverMethod>& methods) {
  BenchResult result;
  for (SolverMethod method : methods) {
    SolverConfig config = base;
    config.method = method;
    config.record_trace = true;
    result.runs.push_back(solve(problem, config));
  }
  if (problem.num_pieces() <= base.lp_max_pieces && problem.dimension() <= base.lp_max_dim) {
    try {
      result.reference_value = solve_lp(problem, base).best_value;
      result.has_reference = true;
    } catch (const SolverError& e) {
      result.reference_note = e.what();
    }
  } else {
    result.reference_note = "problem exceeds the exact solver budget";
  }
  return result;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw InputError("percentile of an empty list");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::vector<double> default_sigma_grid(const DenseMatrix& x, std::size_t count) {
  if (x.rows() < 2) throw InputError("scale grid needs at least two instances");
  if (count == 0) throw InputError("scale grid needs at least one value");
  std::vector<double> distances;
  distances.reserve(x.rows() * (x.rows() - 1) / 2);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = i + 1; j < x.rows(); ++j) {
      double ss = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) {
        const double diff = x(i, c) - x(j, c);
        ss += diff * diff;
      }
      distances.push_back(std::sqrt(ss));
    }
  }
  const double lo = percentile(distances, 10.0);
  const double hi = percentile(distances, 90.0);
  if (!(hi > 0.0)) throw InputError("all instances coincide; no kernel scale can be chosen");
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) {
    grid[k] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  // Duplicated instances can put the 10th percentile at zero, which is not a usable scale.
  if (grid.front() <= 0.0) grid.front() = hi * 1e-3;
  return grid;
}

SelectionReport model_select(const Dataset& data, const FeatureMapSpec& spec, const TrainOptions& options,
                             const std::vector<double>& sigmas, std::size_t splits, double test_fraction,
                             std::uint64_t seed) {
  if (splits == 0) throw InputError("number of splits must be positive");
  if (spec.kind != FeatureKind::random_fourier) throw InputError("model selection tunes the random Fourier scale");
  for (double s : sigmas)
    if (!(s > 0.0)) throw InputError("kernel scales must be positive");

  std::vector<std::pair<Dataset, Dataset>> parts;
  SelectionReport report;
  for (std::size_t k = 0; k < splits; ++k) {
    parts.push_back(stratified_split(data, test_fraction, derive_seed(seed, k)));
    SelectionSplit split;
    split.split = k;
    if (sigmas.empty()) {
      const DenseMatrix& tr = parts.back().first.instances;
      split.sigmas = default_sigma_grid(options.normalize ? apply_normalizer(fit_normalizer(tr), tr) : tr);
    } else {
      split.sigmas = sigmas;
      std::sort(split.sigmas.begin(), split.sigmas.end());
    }
    split.uppers.assign(split.sigmas.size(), 0.0);
    report.splits.push_back(std::move(split));
  }

  std::vector<std::pair<std::size_t, std::size_t>> jobs;
  for (std::size_t k = 0; k < splits; ++k)
    for (std::size_t c = 0; c < report.splits[k].sigmas.size(); ++c) jobs.emplace_back(k, c);
  TrainOptions candidate_options = options;
  candidate_options.compute_lower = false;
  for_each_job(jobs.size(), [&](std::size_t job) {
    const auto [k, c] = jobs[job];
    FeatureMapSpec s = spec;
    s.sigma = report.splits[k].sigmas[c];
    report.splits[k].uppers[c] = train(parts[k].first, s, candidate_options).minimax_risk;
  });

  for_each_job(splits, [&](std::size_t k) {
    SelectionSplit& split = report.splits[k];
    // Strict comparison over ascending scales keeps the smaller scale on ties.
    split.selected = 0;
    for (std::size_t c = 1; c < split.uppers.size(); ++c)
      if (split.uppers[c] < split.uppers[split.selected]) split.selected = c;
    FeatureMapSpec s = spec;
    s.sigma = split.sigmas[split.selected];
    const MrcModel model = train(parts[k].first, s, options);
    const Evaluation e = evaluate(model, parts[k].second);
    split.upper = model.minimax_risk;
    split.lower = model.lower_bound.value_or(std::numeric_limits<double>::quiet_NaN());
    split.risk_rand = e.randomized_risk;
    split.err_det = e.deterministic_error;
  });

  std::vector<double> err, risk, upper, lower;
  for (const SelectionSplit& s : report.splits) {
    err.push_back(s.err_det);
    risk.push_back(s.risk_rand);
    upper.push_back(s.upper);
    lower.push_back(s.lower);
  }
  report.mean_err_det = mean_of(err);
  report.std_err_det = std_of(err);
  report.mean_risk_rand = mean_of(risk);
  report.std_risk_rand = std_of(risk);
  report.mean_upper = mean_of(upper);
  report.mean_lower = mean_of(lower);
  return report;
}

}  // namespace mrc
