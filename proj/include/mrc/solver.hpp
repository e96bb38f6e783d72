#ifndef MRC_SOLVER_HPP
#define MRC_SOLVER_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mrc/matrix.hpp"
#include "mrc/objective.hpp"

namespace mrc {

enum class SolverMethod {
  bsm,           // basic subgradient, step 1/(sqrt(k+1) |g|)
  ebsm,          // bsm with F mu + b maintained incrementally
  asm_basic,     // accelerated subgradient
  easm,          // accelerated, incremental F mu + b
  easm_restart,  // easm restarted from the best point every restart_period iterations
  lp,            // exact simplex on the linear reformulation
};

std::string to_string(SolverMethod method);
/// Accepts bsm, ebsm, asm, easm, easm-restart (or easm_restart) and lp.
SolverMethod parse_solver_method(const std::string& name);

struct SolverConfig {
  SolverMethod method = SolverMethod::easm_restart;
  std::size_t max_iters = 200000;
  std::size_t restart_period = 10000;
  Vector initial_mu;  // empty means zero
  bool record_trace = false;
  std::size_t trace_stride = 1;
  /// A value (constant included) below this is reported as divergence.
  double divergence_floor = -1e6;
  /// Largest allowed size of G = F F^T, in bytes.
  std::size_t gram_budget_bytes = std::size_t{4} << 30;
  std::size_t lp_max_pieces = 2000;
  std::size_t lp_max_dim = 500;
  std::size_t lp_max_pivots = 0;  // 0 lets the simplex choose
  /// Recompute F mu + b exactly every this many incremental iterations (0: never).
  std::size_t resync_period = 0;
  /// Stop once the best value improved by less than stop_tolerance over the
  /// last stop_window iterations (0: disabled).
  std::size_t stop_window = 0;
  double stop_tolerance = 0.0;
  /// Called with (k, mu_k) for every iterate, k = 1 being the initial point.
  std::function<void(std::size_t, std::span<const double>)> observer;
};

struct TracePoint {
  std::size_t iteration = 0;
  double elapsed_seconds = 0.0;
  double best_value = 0.0;
  double gamma = 0.0;
};

struct SolverRun {
  SolverMethod method = SolverMethod::easm_restart;
  Vector best_mu;
  double best_value = 0.0;  // constant included, exact evaluation at best_mu
  double initial_value = 0.0;
  std::size_t iterations = 0;
  std::vector<TracePoint> trace;
  /// Average fraction of components whose sign changed per iteration.
  double gamma = 0.0;
  /// True when the value is an exact LP optimum.
  bool certified = false;
  std::string stop_reason;
  double elapsed_seconds = 0.0;
};

/// a + lambda .* sign(mu) + row_i(F) with i the lowest maximizing row of F mu + b.
Vector subgradient(const PiecewiseLinearProblem& problem, std::span<const double> mu);

SolverRun solve_bsm(const Objective& objective, const SolverConfig& config);
SolverRun solve_bsm(const PiecewiseLinearProblem& problem, const SolverConfig& config);
SolverRun solve_ebsm(const PiecewiseLinearProblem& problem, const SolverConfig& config);

/// Accelerated method; restarts when restart_period < max_iters is requested
/// through the dispatcher. Plain calls run without restarts.
SolverRun solve_asm(const Objective& objective, const SolverConfig& config);
SolverRun solve_asm(const PiecewiseLinearProblem& problem, const SolverConfig& config);
SolverRun solve_easm(const PiecewiseLinearProblem& problem, const SolverConfig& config);
SolverRun solve_easm_restart(const PiecewiseLinearProblem& problem, const SolverConfig& config);

/// Exact optimum through the dual of
///   min a^T(mu1 - mu2) + lambda^T(mu1 + mu2) + nu  s.t.  F(mu1 - mu2) + b <= nu 1,  mu1, mu2 >= 0.
SolverRun solve_lp(const PiecewiseLinearProblem& problem, const SolverConfig& config);

/// Runs config.method.
SolverRun solve(const PiecewiseLinearProblem& problem, const SolverConfig& config);
/// For objectives without a materialized F: bsm/ebsm run bsm, the accelerated
/// methods run asm (restarted for easm_restart); lp is rejected.
SolverRun solve(const Objective& objective, const SolverConfig& config);

/// Writes iteration,elapsed_seconds,best_value,gamma_running rows.
void write_trace_csv(const SolverRun& run, const std::string& path);

}  // namespace mrc

#endif  // MRC_SOLVER_HPP
