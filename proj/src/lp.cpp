#include "mrc/lp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace mrc::lp {

std::string to_string(Status status) {
  switch (status) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
    case Status::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

class Tableau {
 public:
  Tableau(const LinearProgram& lp, const SimplexOptions& options) : tol_(options.tolerance) {
    const std::size_t rows = lp.constraints.rows();
    const std::size_t n = lp.constraints.cols();
    if (lp.rhs.size() != rows || lp.relations.size() != rows || lp.cost.size() != n) {
      throw std::invalid_argument("LinearProgram: inconsistent dimensions");
    }
    num_original_ = n;
    flipped_.assign(rows, false);
    std::vector<Relation> rel = lp.relations;
    for (std::size_t r = 0; r < rows; ++r) {
      if (lp.rhs[r] < 0.0) {
        flipped_[r] = true;
        if (rel[r] == Relation::less_equal) rel[r] = Relation::greater_equal;
        else if (rel[r] == Relation::greater_equal) rel[r] = Relation::less_equal;
      }
    }
    // Column layout: originals, one slack/surplus per inequality, one artificial per >=/= row.
    std::size_t cols = n;
    std::vector<std::size_t> slack_col(rows, npos), art_col(rows, npos);
    for (std::size_t r = 0; r < rows; ++r)
      if (rel[r] != Relation::equal) slack_col[r] = cols++;
    first_artificial_ = cols;
    for (std::size_t r = 0; r < rows; ++r)
      if (rel[r] != Relation::less_equal) art_col[r] = cols++;
    cols_ = cols;

    t_ = DenseMatrix(rows, cols_ + 1);
    basis_.resize(rows);
    identity_col_.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const double sign = flipped_[r] ? -1.0 : 1.0;
      auto src = lp.constraints.row(r);
      for (std::size_t j = 0; j < n; ++j) t_(r, j) = sign * src[j];
      t_(r, cols_) = sign * lp.rhs[r];
      if (rel[r] == Relation::less_equal) {
        t_(r, slack_col[r]) = 1.0;
        basis_[r] = identity_col_[r] = slack_col[r];
      } else {
        if (rel[r] == Relation::greater_equal) t_(r, slack_col[r]) = -1.0;
        t_(r, art_col[r]) = 1.0;
        basis_[r] = identity_col_[r] = art_col[r];
      }
    }
    max_pivots_ = options.max_pivots ? options.max_pivots : 50 * (rows + cols_);
    bland_after_ = options.bland_after;
  }

  LpResult run(const Vector& cost) {
    LpResult result;
    const std::size_t rows = t_.rows();

    if (first_artificial_ < cols_) {
      Vector phase1(cols_, 0.0);
      for (std::size_t j = first_artificial_; j < cols_; ++j) phase1[j] = 1.0;
      set_objective(phase1);
      const Status s = iterate(cols_, result.pivots);
      if (s == Status::iteration_limit) {
        result.status = s;
        return result;
      }
      double infeas = 0.0;
      for (std::size_t r = 0; r < rows; ++r)
        if (basis_[r] >= first_artificial_) infeas += t_(r, cols_);
      double scale = 1.0;
      for (std::size_t r = 0; r < rows; ++r) scale = std::max(scale, std::abs(t_(r, cols_)));
      if (infeas > tol_ * scale * 10.0) {
        result.status = Status::infeasible;
        return result;
      }
      drive_out_artificials(result.pivots);
    }

    Vector phase2(cols_, 0.0);
    for (std::size_t j = 0; j < num_original_; ++j) phase2[j] = cost[j];
    set_objective(phase2);
    result.status = iterate(first_artificial_, result.pivots);
    if (result.status != Status::optimal) return result;

    result.x.assign(num_original_, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
      if (basis_[r] < num_original_) result.x[basis_[r]] = std::max(0.0, t_(r, cols_));
    result.objective = 0.0;
    for (std::size_t j = 0; j < num_original_; ++j) result.objective += cost[j] * result.x[j];
    result.duals.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      const double y = -reduced_[identity_col_[r]];
      result.duals[r] = flipped_[r] ? -y : y;
    }
    return result;
  }

 private:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  void set_objective(const Vector& cost) {
    cost_ = cost;
    reduced_.assign(cols_ + 1, 0.0);
    for (std::size_t j = 0; j < cols_; ++j) reduced_[j] = cost[j];
    for (std::size_t r = 0; r < t_.rows(); ++r) {
      const double cb = cost[basis_[r]];
      if (cb == 0.0) continue;
      auto row = t_.row(r);
      for (std::size_t j = 0; j <= cols_; ++j) reduced_[j] -= cb * row[j];
    }
  }

  // Columns at or beyond `enter_limit` may not enter the basis.
  Status iterate(std::size_t enter_limit, std::size_t& pivots) {
    std::size_t degenerate_run = 0;
    while (true) {
      const bool bland = degenerate_run >= bland_after_;
      std::size_t enter = npos;
      double best = -tol_;
      for (std::size_t j = 0; j < enter_limit; ++j) {
        if (reduced_[j] < best) {
          enter = j;
          if (bland) break;
          best = reduced_[j];
        }
      }
      if (enter == npos) return Status::optimal;

      std::size_t leave = npos;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < t_.rows(); ++r) {
        const double a = t_(r, enter);
        if (a <= tol_) continue;
        const double ratio = std::max(0.0, t_(r, cols_)) / a;
        if (ratio < best_ratio - 1e-12 ||
            (ratio <= best_ratio + 1e-12 && leave != npos && basis_[r] < basis_[leave])) {
          best_ratio = std::min(ratio, best_ratio);
          leave = r;
        }
      }
      if (leave == npos) return Status::unbounded;
      if (++pivots > max_pivots_) return Status::iteration_limit;
      degenerate_run = best_ratio <= tol_ ? degenerate_run + 1 : 0;
      pivot(leave, enter);
    }
  }

  void pivot(std::size_t prow, std::size_t pcol) {
    const std::size_t width = cols_ + 1;
    double* pr = t_.row(prow).data();
    const double inv = 1.0 / pr[pcol];
    for (std::size_t j = 0; j < width; ++j) pr[j] *= inv;
    pr[pcol] = 1.0;
    const auto rows = static_cast<std::ptrdiff_t>(t_.rows());
#pragma omp parallel for schedule(static) if (rows * static_cast<std::ptrdiff_t>(width) > 200000)
    for (std::ptrdiff_t rr = 0; rr < rows; ++rr) {
      const auto r = static_cast<std::size_t>(rr);
      if (r == prow) continue;
      double* row = t_.row(r).data();
      const double f = row[pcol];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < width; ++j) row[j] -= f * pr[j];
      row[pcol] = 0.0;
    }
    const double f = reduced_[pcol];
    if (f != 0.0) {
      for (std::size_t j = 0; j < width; ++j) reduced_[j] -= f * pr[j];
      reduced_[pcol] = 0.0;
    }
    basis_[prow] = pcol;
  }

  void drive_out_artificials(std::size_t& pivots) {
    for (std::size_t r = 0; r < t_.rows(); ++r) {
      if (basis_[r] < first_artificial_) continue;
      std::size_t best = npos;
      double best_abs = tol_;
      for (std::size_t j = 0; j < first_artificial_; ++j) {
        const double a = std::abs(t_(r, j));
        if (a > best_abs) {
          best_abs = a;
          best = j;
        }
      }
      // A row with no usable column is redundant; its artificial stays basic at zero.
      if (best != npos) {
        pivot(r, best);
        ++pivots;
      }
    }
  }

  double tol_;
  std::size_t num_original_ = 0;
  std::size_t first_artificial_ = 0;
  std::size_t cols_ = 0;
  std::size_t max_pivots_ = 0;
  std::size_t bland_after_ = 0;
  DenseMatrix t_;
  Vector cost_;
  Vector reduced_;
  std::vector<std::size_t> basis_;
  std::vector<std::size_t> identity_col_;
  std::vector<bool> flipped_;
};

}  // namespace

LpResult solve(const LinearProgram& program, const SimplexOptions& options) {
  Tableau tableau(program, options);
  return tableau.run(program.cost);
}

}  // namespace mrc::lp
