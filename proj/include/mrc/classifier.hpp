#ifndef MRC_CLASSIFIER_HPP
#define MRC_CLASSIFIER_HPP

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mrc/dataset.hpp"
#include "mrc/estimate.hpp"
#include "mrc/features.hpp"
#include "mrc/matrix.hpp"
#include "mrc/solver.hpp"

namespace mrc {

enum class ModelVariant { standard, fixed_marginal };

std::string to_string(ModelVariant variant);
ModelVariant parse_model_variant(const std::string& name);

/// How one reported number was obtained.
struct SolveSummary {
  std::string method;
  std::size_t iterations = 0;
  double gamma = 0.0;
  bool certified = false;  // exact LP optimum
  double raw_value = 0.0;  // optimizer output before clamping
  std::string stop_reason;
};

struct MrcModel {
  ModelVariant variant = ModelVariant::standard;
  std::shared_ptr<const FeatureMap> features;
  NormalizationStats normalization;  // empty vectors mean no normalization
  std::vector<std::string> label_names;
  UncertaintySet uncertainty;
  Vector mu_star;
  double phi_star = 0.0;
  double minimax_risk = 0.0;  // clamped to [0, 1]
  std::optional<double> lower_bound;
  Vector mu_lower;
  /// Instances (in normalized input space) over which phi is taken.
  DenseMatrix anchor;
  SolveSummary upper_solve;
  std::optional<SolveSummary> lower_solve;
  std::size_t num_pieces = 0;  // rows of F in the learning problem (0 when not materialized)
  std::vector<TracePoint> trace;  // learning solve, when requested; not serialized

  std::size_t num_classes() const { return features->num_classes(); }
};

struct TrainOptions {
  EstimateOptions estimate;
  SolverConfig solver;
  ModelVariant variant = ModelVariant::standard;
  bool normalize = true;
  bool compute_lower = true;
  /// Evaluate the learning objective by the top-k rule instead of building F.
  /// The incremental methods then run as their plain counterparts, which
  /// avoids the |pieces|^2 Gram matrix.
  bool implicit_pieces = false;
  /// Anchor instances in raw input space; the training instances when unset.
  std::optional<DenseMatrix> anchor;
};

/// Messages worth surfacing to the user (repairs, renormalizations).
using Notices = std::vector<std::string>;

/// Normalizes, builds features and the uncertainty set, then calls fit().
/// For identity features the bound C is taken from the normalized data.
MrcModel train(const Dataset& train, FeatureMapSpec spec, const TrainOptions& options,
               Notices* notices = nullptr);

/// Solves the learning problem for a given uncertainty set and anchor set
/// (normalized space) and, when requested, the lower bound of the resulting rule.
MrcModel fit(const UncertaintySet& set, const DenseMatrix& anchor, std::shared_ptr<const FeatureMap> features,
             const TrainOptions& options, const DenseMatrix* train_instances = nullptr);

/// Raw instance to the space the feature map was built on.
Vector normalize_instance(const MrcModel& model, std::span<const double> x);

/// h(. | x). Dispatches to fixed_marginal_proba for fixed-marginal models.
Vector predict_proba(const MrcModel& model, std::span<const double> x);
/// Smallest class index maximizing Phi(x, y)^T mu*.
std::size_t predict(const MrcModel& model, std::span<const double> x);
/// (Phi(x, y)^T mu* - phi(mu*, x))_+ with a defensive renormalization.
Vector fixed_marginal_proba(const MrcModel& model, std::span<const double> x, Notices* notices = nullptr);

/// Sum over classes of (Phi(x, y)^T mu* - phi*)_+.
double normalization_constant(const MrcModel& model, std::span<const double> x);

/// Rule evaluated on every instance of a normalized-space matrix.
DenseMatrix rule_table(const MrcModel& model, const DenseMatrix& normalized_instances, bool deterministic);

struct Evaluation {
  double randomized_risk = 0.0;
  double deterministic_error = 0.0;
};
Evaluation evaluate(const MrcModel& model, const Dataset& test);

struct RuleBounds {
  double lower = 0.0;  // clamped to [0, 1]
  double upper = 0.0;
  SolveSummary lower_solve;
  SolveSummary upper_solve;
  Vector mu_lower;
  Vector mu_upper;
};

/// Lower and upper worst-case risks of the rule `rule(i, y) = h(y | anchor_i)`.
RuleBounds bounds_for_rule(const UncertaintySet& set, const DenseMatrix& anchor, const FeatureMap& features,
                           const DenseMatrix& rule, const SolverConfig& config);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double lo_raw = 0.0;
  double hi_raw = 0.0;
};

/// lo = lower - (lambda_delta - lambda)^T |mu_lower|, hi = upper + (lambda_delta - lambda)^T |mu*|.
Interval high_confidence_bounds(const MrcModel& model, std::span<const double> lambda_delta,
                                std::span<const double> mu_lower);

struct Diagnostics {
  double upper_correction = 0.0;  // (|tau_inf - tau| - lambda)^T |mu*|
  double lower_correction = 0.0;  // same with mu_lower
  bool covered = false;           // |tau_inf - tau| <= lambda componentwise
};
Diagnostics diagnostics(const MrcModel& model, std::span<const double> tau_inf);

struct SupportPoint {
  Vector x;  // raw input space
  std::size_t label = 0;
  double probability = 0.0;
};
/// Sum of p(x, y)(1 - h(y | x)) over a finite distribution.
double exact_risk_finite(const MrcModel& model, std::span<const SupportPoint> support);

/// 6|Y| sqrt((4 + |Y|(m + 1) log s + log(|Y|/delta)) / s)
double epsilon_s(std::size_t s, std::size_t m, std::size_t num_classes, double delta);

}  // namespace mrc

#endif  // MRC_CLASSIFIER_HPP
