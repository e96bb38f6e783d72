#ifndef MRC_ERRORS_HPP
#define MRC_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mrc {

/// Bad user input: unreadable files, malformed values, violated preconditions.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure inside an optimization or LP routine.
class SolverError : public std::runtime_error {
 public:
  enum class Kind { divergence, unbounded, infeasible, budget, iteration_limit };

  SolverError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace mrc

#endif  // MRC_ERRORS_HPP
