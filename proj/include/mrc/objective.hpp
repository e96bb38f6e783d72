#ifndef MRC_OBJECTIVE_HPP
#define MRC_OBJECTIVE_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "mrc/estimate.hpp"
#include "mrc/features.hpp"
#include "mrc/matrix.hpp"

namespace mrc {

/// Largest label-set size for which the 2^|Y| - 1 subset rows are materialized.
inline constexpr std::size_t kMaxEnumeratedClasses = 12;

/// Which way the solver's minimum maps back to the reported quantity.
enum class ObjectiveSense {
  minimize,          // report min f
  maximize_negated,  // f is the negated objective of a maximization; report -min f
};

/// The instance and label set (bit mask over class indices) behind a row of F.
struct RowOrigin {
  std::size_t instance = 0;
  std::uint32_t labels = 0;
};

/// f(mu) = constant + a^T mu + lambda^T |mu| + max(F mu + b)
struct PiecewiseLinearProblem {
  Vector a;
  Vector lambda;
  DenseMatrix F;
  Vector b;
  double constant = 0.0;
  ObjectiveSense sense = ObjectiveSense::minimize;
  std::vector<RowOrigin> origins;
  /// Optional factorization F_r = sum_y row_weights(r, y) e_y (x) psi(x_{origins[r].instance}),
  /// filled by the builders below; lets F F^T be formed from the instance Gram
  /// matrix. Empty when F has no such structure.
  DenseMatrix instance_features;  // anchor instances x block size
  DenseMatrix row_weights;        // pieces x classes

  std::size_t dimension() const noexcept { return a.size(); }
  std::size_t num_pieces() const noexcept { return b.size(); }

  /// f(mu), constant included.
  double value(std::span<const double> mu) const;
  /// Converts a minimum of f into the reported quantity.
  double reported(double f) const noexcept { return sense == ObjectiveSense::minimize ? f : -f; }

  void validate() const;
  bool structured() const noexcept { return !instance_features.empty(); }
};

/// Maximizer of (sum of the top-k scores - 1) / k over k.
struct SubsetMax {
  double value = 0.0;
  std::uint32_t labels = 0;  // maximizing label set
  std::size_t size = 0;
};

/// max over nonempty C of (sum_{y in C} scores_y - 1)/|C|. For a fixed |C| = k
/// the best set is the k largest scores, so only |Y| candidates are examined.
/// Ties favour the smaller set and, within equal scores, lower class indices.
SubsetMax best_label_subset(std::span<const double> scores);

/// phi(mu) over the listed instances.
double phi(std::span<const double> mu, const DenseMatrix& instances, const FeatureMap& features);
/// Per-instance phi.
double phi_at_x(std::span<const double> mu, std::span<const double> x, const FeatureMap& features);

/// Problem whose minimum is the minimax risk; rows ordered instance-major,
/// then label subsets by ascending bit mask.
PiecewiseLinearProblem build_learning_problem(const UncertaintySet& set, const DenseMatrix& anchor,
                                              const FeatureMap& features);

/// Problem whose minimum is the worst-case risk of the rule h; rule(i, y) = h(y | x_i).
PiecewiseLinearProblem build_upper_bound_problem(const UncertaintySet& set, const DenseMatrix& anchor,
                                                 const FeatureMap& features, const DenseMatrix& rule);

/// Negated best-case risk problem; reported() turns its minimum into the lower bound.
PiecewiseLinearProblem build_lower_bound_problem(const UncertaintySet& set, const DenseMatrix& anchor,
                                                 const FeatureMap& features, const DenseMatrix& rule);

/// A convex function with subgradients, for solvers that do not need F.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t dimension() const = 0;
  virtual double constant() const = 0;
  /// Returns f(mu) - constant() and writes a subgradient.
  virtual double evaluate(std::span<const double> mu, std::span<double> subgradient) const = 0;
};

/// Adapter evaluating a materialized problem. Holds scratch space, so one
/// instance must not be shared between threads.
class PiecewiseObjective final : public Objective {
 public:
  explicit PiecewiseObjective(const PiecewiseLinearProblem& problem);
  std::size_t dimension() const override { return problem_.dimension(); }
  double constant() const override { return problem_.constant; }
  double evaluate(std::span<const double> mu, std::span<double> subgradient) const override;
  /// Row selected by the last evaluate() call.
  std::size_t last_row() const noexcept { return last_row_; }

 private:
  const PiecewiseLinearProblem& problem_;
  mutable Vector values_;
  mutable std::size_t last_row_ = 0;
};

/// Learning objective evaluated by the top-k rule without materializing F;
/// usable for any |Y|.
class TopKLearningObjective final : public Objective {
 public:
  TopKLearningObjective(const UncertaintySet& set, const DenseMatrix& anchor, const FeatureMap& features);
  std::size_t dimension() const override { return tau_.size(); }
  double constant() const override { return 1.0; }
  double evaluate(std::span<const double> mu, std::span<double> subgradient) const override;

 private:
  Vector tau_;
  Vector lambda_;
  DenseMatrix psi_;
  const FeatureMap& features_;
};

/// 1 - tau^T mu + (1/n) sum_i phi(mu, x_i) + lambda^T |mu|: the learning
/// objective when the instance marginal is pinned to the training sample.
class FixedMarginalObjective final : public Objective {
 public:
  FixedMarginalObjective(const UncertaintySet& set, const DenseMatrix& train_instances,
                         const FeatureMap& features);
  std::size_t dimension() const override { return tau_.size(); }
  double constant() const override { return 1.0; }
  double evaluate(std::span<const double> mu, std::span<double> subgradient) const override;

 private:
  Vector tau_;
  Vector lambda_;
  DenseMatrix psi_;
  const FeatureMap& features_;
};

inline double sign(double v) noexcept { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace mrc

#endif  // MRC_OBJECTIVE_HPP
