#include "mrc/solver.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>

#include "mrc/errors.hpp"
#include "mrc/kernels.hpp"
#include "mrc/lp.hpp"

namespace mrc {

std::string to_string(SolverMethod method) {
  switch (method) {
    case SolverMethod::bsm: return "bsm";
    case SolverMethod::ebsm: return "ebsm";
    case SolverMethod::asm_basic: return "asm";
    case SolverMethod::easm: return "easm";
    case SolverMethod::easm_restart: return "easm-restart";
    case SolverMethod::lp: return "lp";
  }
  return "unknown";
}

SolverMethod parse_solver_method(const std::string& name) {
  if (name == "bsm") return SolverMethod::bsm;
  if (name == "ebsm") return SolverMethod::ebsm;
  if (name == "asm") return SolverMethod::asm_basic;
  if (name == "easm") return SolverMethod::easm;
  if (name == "easm-restart" || name == "easm_restart") return SolverMethod::easm_restart;
  if (name == "lp") return SolverMethod::lp;
  throw InputError("unknown solver '" + name + "' (expected bsm, ebsm, asm, easm, easm-restart or lp)");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_config(const SolverConfig& config, std::size_t m) {
  if (config.max_iters < 1) throw InputError("max_iters must be at least 1");
  if (config.restart_period < 1) throw InputError("restart_period must be at least 1");
  if (!config.initial_mu.empty() && config.initial_mu.size() != m) {
    throw InputError("initial point has length " + std::to_string(config.initial_mu.size()) +
                     ", expected " + std::to_string(m));
  }
}

Vector initial_point(const SolverConfig& config, std::size_t m) {
  return config.initial_mu.empty() ? Vector(m, 0.0) : config.initial_mu;
}

// Best-so-far bookkeeping shared by the iterative methods. Values passed in
// exclude the constant.
class Progress {
 public:
  Progress(const SolverConfig& config, double constant, SolverRun& run)
      : config_(config), constant_(constant), run_(run), start_(Clock::now()) {}

  void begin(std::span<const double> mu, double f) {
    check(f);
    run_.best_mu.assign(mu.begin(), mu.end());
    best_ = f;
    checkpoint_ = f;
    run_.initial_value = f + constant_;
    if (config_.observer) config_.observer(1, mu);
    if (config_.record_trace) run_.trace.push_back({0, seconds_since(start_), f + constant_, 0.0});
  }

  // Records mu_{k+1} after the k-th update; returns true to stop early.
  bool step(std::size_t k, std::span<const double> mu, double f, double gamma) {
    check(f);
    if (f < best_) {
      best_ = f;
      run_.best_mu.assign(mu.begin(), mu.end());
    }
    run_.iterations = k;
    run_.gamma = gamma;
    if (config_.observer) config_.observer(k + 1, mu);
    const bool last = k == config_.max_iters;
    if (config_.record_trace && (k % config_.trace_stride == 0 || last)) {
      run_.trace.push_back({k, seconds_since(start_), best_ + constant_, gamma});
    }
    if (config_.stop_window > 0 && k % config_.stop_window == 0) {
      const bool stalled = checkpoint_ - best_ < config_.stop_tolerance;
      checkpoint_ = best_;
      if (stalled) {
        run_.stop_reason = "stalled";
        return true;
      }
    }
    return false;
  }

  double best() const noexcept { return best_; }
  const Vector& best_mu() const noexcept { return run_.best_mu; }

  void finish(double exact_best) {
    run_.best_value = exact_best + constant_;
    run_.elapsed_seconds = seconds_since(start_);
    if (run_.stop_reason.empty()) run_.stop_reason = "max_iters";
    if (config_.record_trace && !run_.trace.empty() && run_.trace.back().iteration != run_.iterations) {
      run_.trace.push_back({run_.iterations, run_.elapsed_seconds, best_ + constant_, run_.gamma});
    }
  }

 private:
  void check(double f) const {
    if (!std::isfinite(f)) throw SolverError(SolverError::Kind::divergence, "objective became non-finite");
    if (f + constant_ < config_.divergence_floor) {
      throw SolverError(SolverError::Kind::divergence,
                        "objective fell below " + std::to_string(config_.divergence_floor) +
                            "; the problem is likely unbounded (empty uncertainty set)");
    }
  }

  const SolverConfig& config_;
  double constant_;
  SolverRun& run_;
  Clock::time_point start_;
  double best_ = 0.0;
  double checkpoint_ = 0.0;
};

// The two update formulas below are shared by the plain and incremental
// methods so that both produce bit-identical iterates.
inline double subgradient_entry(double a, double lambda, double s, double row) {
  return a + lambda * s + row;
}

inline void accelerated_step(std::span<double> mu, std::span<double> y, std::span<const double> g,
                             double c, double eta) {
  for (std::size_t j = 0; j < mu.size(); ++j) {
    const double y_next = mu[j] - c * g[j];
    mu[j] = (1.0 + eta) * y_next - eta * y[j];
    y[j] = y_next;
  }
}

double norm2(std::span<const double> v) { return std::sqrt(kernels::dot(v, v)); }

// Step-size schedule of the accelerated method.
struct Schedule {
  double c = 1.0;
  double theta = 1.0;
  double eta = 0.0;

  // Advances from step k to k + 1 (k counts from 1 within a segment).
  void advance(std::size_t k) {
    const double next = static_cast<double>(k + 1);
    c = std::pow(next, -1.5);
    const double theta_next = 2.0 / next;
    eta = theta_next * (1.0 / theta - 1.0);
    theta = theta_next;
  }
};

std::size_t count_sign_changes(std::span<const double> before, std::span<const double> after) {
  std::size_t n = 0;
  for (std::size_t j = 0; j < before.size(); ++j) n += sign(before[j]) != sign(after[j]);
  return n;
}

// Incremental state: alpha = F a, G = F F^T, Ht row j = column j of 2 F diag(lambda).
struct Precomputed {
  Vector alpha;
  DenseMatrix gram;
  DenseMatrix h_transposed;
};

Precomputed precompute(const PiecewiseLinearProblem& problem, const SolverConfig& config) {
  const std::size_t p = problem.num_pieces();
  const double bytes = static_cast<double>(p) * static_cast<double>(p) * sizeof(double);
  if (bytes > static_cast<double>(config.gram_budget_bytes)) {
    throw SolverError(SolverError::Kind::budget,
                      "F F^T for " + std::to_string(p) + " pieces needs " +
                          std::to_string(static_cast<long long>(bytes / (1 << 20))) +
                          " MiB, above the configured budget; use --solver asm instead");
  }
  Precomputed pre;
  pre.alpha.resize(p);
  kernels::matvec(problem.F, problem.a, {}, pre.alpha);
  if (problem.structured()) {
    std::vector<std::size_t> instance(p);
    for (std::size_t r = 0; r < p; ++r) instance[r] = problem.origins[r].instance;
    pre.gram = kernels::structured_gram(kernels::gram(problem.instance_features), instance, problem.row_weights);
  } else {
    pre.gram = kernels::gram(problem.F);
  }
  Vector scale(problem.dimension());
  for (std::size_t j = 0; j < scale.size(); ++j) scale[j] = 2.0 * problem.lambda[j];
  pre.h_transposed = kernels::scaled_transpose(problem.F, scale);
  return pre;
}

double linear_terms(const PiecewiseLinearProblem& problem, std::span<const double> mu) {
  double f = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) f += problem.a[j] * mu[j] + problem.lambda[j] * std::abs(mu[j]);
  return f;
}

// d += sum_j (Delta_j / 2) col_j(H) over the components whose sign changed.
std::size_t update_d(const Precomputed& pre, std::span<const double> s_old, std::span<const double> s_new,
                     std::span<double> d) {
  std::size_t changed = 0;
  for (std::size_t j = 0; j < s_old.size(); ++j) {
    const double delta = s_new[j] - s_old[j];
    if (delta == 0.0) continue;
    ++changed;
    if (delta == 2.0) kernels::axpy(1.0, pre.h_transposed.row(j), d);
    else if (delta == -2.0) kernels::axpy(-1.0, pre.h_transposed.row(j), d);
    else kernels::axpy(0.5 * delta, pre.h_transposed.row(j), d);
  }
  return changed;
}

void initial_d(const Precomputed& pre, std::span<const double> s, std::span<double> d) {
  std::fill(d.begin(), d.end(), 0.0);
  for (std::size_t j = 0; j < s.size(); ++j)
    if (s[j] != 0.0) kernels::axpy(0.5 * s[j], pre.h_transposed.row(j), d);
}

Vector signs(std::span<const double> mu) {
  Vector s(mu.size());
  for (std::size_t j = 0; j < mu.size(); ++j) s[j] = sign(mu[j]);
  return s;
}

// Accelerated method over an Objective, restarted from the best point every
// `period` iterations.
SolverRun accelerated(const Objective& objective, const SolverConfig& config, std::size_t period,
                      SolverMethod method) {
  const std::size_t m = objective.dimension();
  check_config(config, m);
  SolverRun run;
  run.method = method;
  Progress progress(config, objective.constant(), run);
  Vector mu = initial_point(config, m);
  Vector g(m);
  double f = objective.evaluate(mu, g);
  progress.begin(mu, f);
  Vector y = mu;
  Schedule schedule;
  std::size_t local = 1;
  double gamma_sum = 0.0;
  Vector previous(m);
  for (std::size_t k = 1; k <= config.max_iters; ++k) {
    previous = mu;
    accelerated_step(mu, y, g, schedule.c, schedule.eta);
    f = objective.evaluate(mu, g);
    gamma_sum += static_cast<double>(count_sign_changes(previous, mu)) / static_cast<double>(m);
    schedule.advance(local++);
    if (progress.step(k, mu, f, gamma_sum / static_cast<double>(k))) break;
    if (local > period && k < config.max_iters) {
      mu = progress.best_mu();
      y = mu;
      f = objective.evaluate(mu, g);
      schedule = Schedule{};
      local = 1;
    }
  }
  progress.finish(progress.best());
  return run;
}

SolverRun basic(const Objective& objective, const SolverConfig& config) {
  const std::size_t m = objective.dimension();
  check_config(config, m);
  SolverRun run;
  run.method = SolverMethod::bsm;
  Progress progress(config, objective.constant(), run);
  Vector mu = initial_point(config, m);
  Vector g(m), previous(m);
  double f = objective.evaluate(mu, g);
  progress.begin(mu, f);
  double gamma_sum = 0.0;
  for (std::size_t k = 1; k <= config.max_iters; ++k) {
    const double norm = norm2(g);
    if (norm == 0.0) {
      run.stop_reason = "zero_subgradient";
      break;
    }
    const double c = 1.0 / (std::sqrt(static_cast<double>(k + 1)) * norm);
    previous = mu;
    kernels::axpy(-c, g, mu);
    f = objective.evaluate(mu, g);
    gamma_sum += static_cast<double>(count_sign_changes(previous, mu)) / static_cast<double>(m);
    if (progress.step(k, mu, f, gamma_sum / static_cast<double>(k))) break;
  }
  progress.finish(progress.best());
  return run;
}

// Shared body of easm and easm_restart.
SolverRun efficient_accelerated(const PiecewiseLinearProblem& problem, const SolverConfig& config,
                                std::size_t period, SolverMethod method) {
  problem.validate();
  const std::size_t m = problem.dimension();
  const std::size_t p = problem.num_pieces();
  check_config(config, m);
  const Precomputed pre = precompute(problem, config);

  SolverRun run;
  run.method = method;
  Progress progress(config, problem.constant, run);

  Vector mu = initial_point(config, m);
  Vector y(m), g(m), s(m), s_next(m);
  Vector v(p), w(p), u(p), d(p);
  std::size_t i = 0;
  double f = 0.0;

  // (Re)starts the recursions at mu, computing F mu + b exactly.
  auto reset = [&] {
    y = mu;
    kernels::matvec(problem.F, mu, problem.b, v);
    w = v;
    s = signs(mu);
    initial_d(pre, s, d);
    i = kernels::argmax(v);
    f = linear_terms(problem, mu) + v[i];
  };
  reset();
  progress.begin(mu, f);

  Schedule schedule;
  std::size_t local = 1;
  double gamma_sum = 0.0;
  for (std::size_t k = 1; k <= config.max_iters; ++k) {
    auto row = problem.F.row(i);
    for (std::size_t j = 0; j < m; ++j) g[j] = subgradient_entry(problem.a[j], problem.lambda[j], s[j], row[j]);
    accelerated_step(mu, y, g, schedule.c, schedule.eta);

    auto gram_col = pre.gram.row(i);
    const double c = schedule.c;
    const double eta = schedule.eta;
    for (std::size_t r = 0; r < p; ++r) {
      u[r] = pre.alpha[r] + d[r] + gram_col[r];
      const double w_next = v[r] - c * u[r];
      v[r] = (1.0 + eta) * w_next - eta * w[r];
      w[r] = w_next;
    }
    if (config.resync_period > 0 && k % config.resync_period == 0) {
      kernels::matvec(problem.F, mu, problem.b, v);
      kernels::matvec(problem.F, y, problem.b, w);
    }
    i = kernels::argmax(v);

    for (std::size_t j = 0; j < m; ++j) s_next[j] = sign(mu[j]);
    const std::size_t changed = update_d(pre, s, s_next, d);
    std::swap(s, s_next);
    gamma_sum += static_cast<double>(changed) / static_cast<double>(m);

    schedule.advance(local++);
    f = linear_terms(problem, mu) + v[i];
    if (progress.step(k, mu, f, gamma_sum / static_cast<double>(k))) break;
    if (local > period && k < config.max_iters) {
      mu = progress.best_mu();
      reset();
      schedule = Schedule{};
      local = 1;
    }
  }
  // The tracked values come from the recursions; report the exact value.
  progress.finish(problem.value(run.best_mu) - problem.constant);
  return run;
}

}  // namespace

Vector subgradient(const PiecewiseLinearProblem& problem, std::span<const double> mu) {
  PiecewiseObjective objective(problem);
  Vector g(problem.dimension());
  objective.evaluate(mu, g);
  return g;
}

SolverRun solve_bsm(const Objective& objective, const SolverConfig& config) { return basic(objective, config); }

SolverRun solve_bsm(const PiecewiseLinearProblem& problem, const SolverConfig& config) {
  PiecewiseObjective objective(problem);
  SolverRun run = basic(objective, config);
  run.best_value = problem.value(run.best_mu);
  return run;
}

SolverRun solve_ebsm(const PiecewiseLinearProblem& problem, const SolverConfig& config) {
  problem.validate();
  const std::size_t m = problem.dimension();
  const std::size_t p = problem.num_pieces();
  check_config(config, m);
  const Precomputed pre = precompute(problem, config);

  SolverRun run;
  run.method = SolverMethod::ebsm;
  Progress progress(config, problem.constant, run);
  Vector mu = initial_point(config, m);
  Vector g(m), s = signs(mu), s_next(m), v(p), d(p);
  kernels::matvec(problem.F, mu, problem.b, v);
  initial_d(pre, s, d);
  std::size_t i = kernels::argmax(v);
  progress.begin(mu, linear_terms(problem, mu) + v[i]);

  double gamma_sum = 0.0;
  for (std::size_t k = 1; k <= config.max_iters; ++k) {
    auto row = problem.F.row(i);
    for (std::size_t j = 0; j < m; ++j) g[j] = subgradient_entry(problem.a[j], problem.lambda[j], s[j], row[j]);
    const double norm = norm2(g);
    if (norm == 0.0) {
      run.stop_reason = "zero_subgradient";
      break;
    }
    const double c = 1.0 / (std::sqrt(static_cast<double>(k + 1)) * norm);
    kernels::axpy(-c, g, mu);
    auto gram_col = pre.gram.row(i);
    for (std::size_t r = 0; r < p; ++r) v[r] -= c * (pre.alpha[r] + d[r] + gram_col[r]);
    if (config.resync_period > 0 && k % config.resync_period == 0) kernels::matvec(problem.F, mu, problem.b, v);
    i = kernels::argmax(v);
    for (std::size_t j = 0; j < m; ++j) s_next[j] = sign(mu[j]);
    gamma_sum += static_cast<double>(update_d(pre, s, s_next, d)) / static_cast<double>(m);
    std::swap(s, s_next);
    if (progress.step(k, mu, linear_terms(problem, mu) + v[i], gamma_sum / static_cast<double>(k))) break;
  }
  progress.finish(problem.value(run.best_mu) - problem.constant);
  return run;
}

SolverRun solve_asm(const Objective& objective, const SolverConfig& config) {
  return accelerated(objective, config, config.max_iters, SolverMethod::asm_basic);
}

SolverRun solve_asm(const PiecewiseLinearProblem& problem, const SolverConfig& config) {
  PiecewiseObjective objective(problem);
  return accelerated(objective, config, config.max_iters, SolverMethod::asm_basic);
}

SolverRun solve_easm(const PiecewiseLinearProblem& problem, const SolverConfig& config) {
  return efficient_accelerated(problem, config, config.max_iters, SolverMethod::easm);
}

SolverRun solve_easm_restart(const PiecewiseLinearProblem& problem, const SolverConfig& config) {
  return efficient_accelerated(problem, config, config.restart_period, SolverMethod::easm_restart);
}

SolverRun solve_lp(const PiecewiseLinearProblem& problem, const SolverConfig& config) {
  problem.validate();
  const std::size_t m = problem.dimension();
  const std::size_t p = problem.num_pieces();
  if (p > config.lp_max_pieces || m > config.lp_max_dim) {
    throw SolverError(SolverError::Kind::budget,
                      "exact solver limited to " + std::to_string(config.lp_max_pieces) + " pieces and " +
                          std::to_string(config.lp_max_dim) + " parameters (problem has " +
                          std::to_string(p) + " and " + std::to_string(m) + ")");
  }
  const auto start = Clock::now();

  // Dual: max b^T q  s.t.  -lambda - a <= F^T q <= lambda - a,  1^T q = 1,  q >= 0.
  lp::LinearProgram program;
  program.constraints = DenseMatrix(2 * m + 1, p);
  program.rhs.resize(2 * m + 1);
  program.relations.resize(2 * m + 1);
  for (std::size_t r = 0; r < p; ++r) {
    auto row = problem.F.row(r);
    for (std::size_t j = 0; j < m; ++j) {
      program.constraints(j, r) = row[j];
      program.constraints(m + j, r) = row[j];
    }
    program.constraints(2 * m, r) = 1.0;
  }
  for (std::size_t j = 0; j < m; ++j) {
    program.rhs[j] = problem.lambda[j] - problem.a[j];
    program.relations[j] = lp::Relation::less_equal;
    program.rhs[m + j] = -problem.lambda[j] - problem.a[j];
    program.relations[m + j] = lp::Relation::greater_equal;
  }
  program.rhs[2 * m] = 1.0;
  program.relations[2 * m] = lp::Relation::equal;
  program.cost.resize(p);
  for (std::size_t r = 0; r < p; ++r) program.cost[r] = -problem.b[r];

  lp::SimplexOptions options;
  options.max_pivots = config.lp_max_pivots;
  const lp::LpResult result = lp::solve(program, options);
  switch (result.status) {
    case lp::Status::optimal: break;
    case lp::Status::infeasible:
      throw SolverError(SolverError::Kind::unbounded, "objective is unbounded below (the uncertainty set is empty)");
    case lp::Status::unbounded:
      throw SolverError(SolverError::Kind::infeasible, "linear reformulation reported an unbounded dual");
    case lp::Status::iteration_limit:
      throw SolverError(SolverError::Kind::iteration_limit, "simplex pivot limit reached");
  }

  // The multipliers of the two inequality groups sum to the optimal mu.
  SolverRun run;
  run.method = SolverMethod::lp;
  run.best_mu.resize(m);
  for (std::size_t j = 0; j < m; ++j) run.best_mu[j] = result.duals[j] + result.duals[m + j];
  run.best_value = problem.value(run.best_mu);
  run.initial_value = problem.value(initial_point(config, m));
  run.iterations = result.pivots;
  run.certified = true;
  run.stop_reason = "optimal";
  run.elapsed_seconds = seconds_since(start);
  if (config.record_trace) run.trace.push_back({result.pivots, run.elapsed_seconds, run.best_value, 0.0});
  const double dual_value = problem.constant - result.objective;
  if (std::abs(dual_value - run.best_value) > 1e-6 * (1.0 + std::abs(dual_value))) {
    throw SolverError(SolverError::Kind::infeasible,
                      "simplex multipliers do not reproduce the optimum (" + std::to_string(run.best_value) +
                          " vs " + std::to_string(dual_value) + ")");
  }
  return run;
}

SolverRun solve(const PiecewiseLinearProblem& problem, const SolverConfig& config) {
  switch (config.method) {
    case SolverMethod::bsm: return solve_bsm(problem, config);
    case SolverMethod::ebsm: return solve_ebsm(problem, config);
    case SolverMethod::asm_basic: return solve_asm(problem, config);
    case SolverMethod::easm: return solve_easm(problem, config);
    case SolverMethod::easm_restart: return solve_easm_restart(problem, config);
    case SolverMethod::lp: return solve_lp(problem, config);
  }
  throw InputError("unknown solver method");
}

SolverRun solve(const Objective& objective, const SolverConfig& config) {
  switch (config.method) {
    case SolverMethod::bsm:
    case SolverMethod::ebsm: return solve_bsm(objective, config);
    case SolverMethod::asm_basic:
    case SolverMethod::easm: return solve_asm(objective, config);
    case SolverMethod::easm_restart:
      return accelerated(objective, config, config.restart_period, SolverMethod::easm_restart);
    case SolverMethod::lp: break;
  }
  throw InputError("the exact solver needs a materialized problem");
}

void write_trace_csv(const SolverRun& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError(path + ": cannot open for writing");
  out.precision(17);
  out << "iteration,elapsed_seconds,best_value,gamma_running\n";
  for (const TracePoint& t : run.trace)
    out << t.iteration << ',' << t.elapsed_seconds << ',' << t.best_value << ',' << t.gamma << '\n';
}

}  // namespace mrc
