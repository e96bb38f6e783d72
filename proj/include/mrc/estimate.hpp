#ifndef MRC_ESTIMATE_HPP
#define MRC_ESTIMATE_HPP

#include <span>
#include <string>

#include "mrc/features.hpp"
#include "mrc/matrix.hpp"

namespace mrc {

enum class LambdaMode { hoeffding, bernstein, rademacher, practical };

std::string to_string(LambdaMode mode);
LambdaMode parse_lambda_mode(const std::string& name);

/// How a confidence vector was produced, kept for reports and model files.
struct LambdaProvenance {
  LambdaMode mode = LambdaMode::practical;
  double delta = 0.05;
  double lambda0 = 0.3;
  double feature_bound = 1.0;
  std::size_t family_size = 0;
  double rademacher_r = 0.0;
  bool repaired = false;  // widened by ensure_feasible
};

/// {p : |E_p Phi - tau| <= lambda componentwise}
struct UncertaintySet {
  Vector tau;
  Vector lambda;
  LambdaProvenance provenance;

  std::size_t size() const noexcept { return tau.size(); }
};

struct SampleMoments {
  Vector tau;
  Vector variance;  // unbiased, n - 1 denominator
};

/// Sample average of Phi(x_i, y_i).
Vector mean_vector(const DenseMatrix& instances, std::span<const std::size_t> labels,
                   const FeatureMap& features);

/// Mean and unbiased variance of every component of Phi; needs n >= 2.
SampleMoments sample_moments(const DenseMatrix& instances, std::span<const std::size_t> labels,
                             const FeatureMap& features);

/// Column-wise mean and unbiased variance of explicit feature vectors (one per row).
SampleMoments column_moments(const DenseMatrix& phi_rows);

// Confidence widths. All logarithms are natural.

/// C sqrt(2 log(2|F||Y|/delta) / n), the same for every component.
double lambda_hoeffding(double feature_bound, std::size_t family_size, std::size_t num_classes,
                        double delta, std::size_t n);

/// 2C sqrt(2 v_i log(4|F||Y|/delta)/n) + 14 C log(4|F||Y|/delta) / (3(n-1))
Vector lambda_bernstein(double feature_bound, std::size_t family_size, std::size_t num_classes,
                        double delta, std::size_t n, std::span<const double> variance);

/// 2 sqrt(n_j/n) R/sqrt(n) + C (1 + 2 sqrt(n_j/n)) sqrt(log(4|Y|/delta)/(2n)), with
/// j = component_class[i].
Vector lambda_rademacher(double feature_bound, double rademacher_r, double delta, std::size_t n,
                         std::span<const std::size_t> class_counts,
                         std::span<const std::size_t> component_class);

/// lambda0 sqrt(v / n)
Vector lambda_practical(double lambda0, std::span<const double> variance, std::size_t n);

/// Class owning each component of a one-hot feature map.
std::vector<std::size_t> component_classes(const FeatureMap& features);

struct EstimateOptions {
  LambdaMode mode = LambdaMode::practical;
  double lambda0 = 0.3;
  double delta = 0.05;
  double rademacher_r = 1.0;
};

/// tau as the sample mean and lambda from the selected estimator.
UncertaintySet estimate_uncertainty(const DenseMatrix& instances, std::span<const std::size_t> labels,
                                    const FeatureMap& features, const EstimateOptions& options);

/// Smallest total widening (and matching shift of tau) that makes the set
/// restricted to distributions over `instances` x Y nonempty. The result
/// satisfies lambda_out >= lambda_in; it is unchanged when already feasible.
/// Throws SolverError when the LP fails.
UncertaintySet ensure_feasible(const UncertaintySet& set, const DenseMatrix& instances,
                               const FeatureMap& features);

/// Same LP over an explicit list of achievable feature vectors (one per row).
UncertaintySet ensure_feasible(const UncertaintySet& set, const DenseMatrix& achievable_phi);

}  // namespace mrc

#endif  // MRC_ESTIMATE_HPP
