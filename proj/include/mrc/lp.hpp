#ifndef MRC_LP_HPP
#define MRC_LP_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "mrc/matrix.hpp"

namespace mrc::lp {

enum class Relation { less_equal, greater_equal, equal };
enum class Status { optimal, infeasible, unbounded, iteration_limit };

std::string to_string(Status status);

/// minimize cost^T x  subject to  row_i(A) x (<=, >=, =) rhs_i,  x >= 0.
struct LinearProgram {
  DenseMatrix constraints;
  Vector rhs;
  std::vector<Relation> relations;
  Vector cost;
};

struct LpResult {
  Status status = Status::iteration_limit;
  Vector x;
  double objective = 0.0;
  /// One multiplier per constraint with cost^T x = rhs^T duals at the optimum
  /// (<= rows get nonpositive values, >= rows nonnegative).
  Vector duals;
  std::size_t pivots = 0;
};

struct SimplexOptions {
  double tolerance = 1e-9;
  std::size_t max_pivots = 0;  // 0 selects 50 * (rows + columns)
  /// Consecutive degenerate pivots tolerated under largest-coefficient pricing
  /// before switching to Bland's rule.
  std::size_t bland_after = 25;
};

/// Two-phase dense simplex. Largest-coefficient pricing with a fallback to
/// Bland's smallest-index rule while pivots stay degenerate.
LpResult solve(const LinearProgram& program, const SimplexOptions& options = {});

}  // namespace mrc::lp

#endif  // MRC_LP_HPP
