#include "mrc/objective.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "mrc/errors.hpp"
#include "mrc/kernels.hpp"

namespace mrc {

void PiecewiseLinearProblem::validate() const {
  const std::size_t m = a.size();
  if (lambda.size() != m || F.cols() != m || F.rows() != b.size() || b.empty()) {
    throw InputError("piecewise-linear problem has inconsistent dimensions");
  }
  for (double l : lambda)
    if (l < 0.0 || !std::isfinite(l)) throw InputError("confidence vector must be finite and nonnegative");
  if (structured() && (origins.size() != b.size() || row_weights.rows() != b.size() ||
                       row_weights.cols() * instance_features.cols() != m)) {
    throw InputError("piecewise-linear problem has an inconsistent row factorization");
  }
}

double PiecewiseLinearProblem::value(std::span<const double> mu) const {
  Vector v(num_pieces());
  kernels::matvec(F, mu, b, v);
  double f = constant + v[kernels::argmax(v)];
  for (std::size_t j = 0; j < mu.size(); ++j) f += a[j] * mu[j] + lambda[j] * std::abs(mu[j]);
  return f;
}

SubsetMax best_label_subset(std::span<const double> scores) {
  const std::size_t k_max = scores.size();
  std::vector<std::uint32_t> order(k_max);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t l, std::uint32_t r) { return scores[l] > scores[r]; });
  SubsetMax best;
  double prefix = 0.0;
  std::uint32_t mask = 0;
  for (std::size_t k = 1; k <= k_max; ++k) {
    prefix += scores[order[k - 1]];
    mask |= 1u << order[k - 1];
    const double v = (prefix - 1.0) / static_cast<double>(k);
    if (k == 1 || v > best.value) best = {v, mask, k};
  }
  return best;
}

double phi_at_x(std::span<const double> mu, std::span<const double> x, const FeatureMap& features) {
  const Vector psi = features.scalar_features(x);
  Vector scores(features.num_classes());
  features.class_scores(psi, mu, scores);
  return best_label_subset(scores).value;
}

double phi(std::span<const double> mu, const DenseMatrix& instances, const FeatureMap& features) {
  double best = -std::numeric_limits<double>::infinity();
  Vector psi(features.block_size());
  Vector scores(features.num_classes());
  for (std::size_t i = 0; i < instances.rows(); ++i) {
    features.scalar_features(instances.row(i), psi);
    features.class_scores(psi, mu, scores);
    best = std::max(best, best_label_subset(scores).value);
  }
  return best;
}

namespace {

void check_set(const UncertaintySet& set, const DenseMatrix& anchor, const FeatureMap& features) {
  if (set.tau.size() != features.size() || set.lambda.size() != features.size()) {
    throw InputError("uncertainty set length does not match the feature map");
  }
  if (anchor.rows() == 0) throw InputError("anchor instance set is empty");
}

void check_rule(const DenseMatrix& rule, const DenseMatrix& anchor, const FeatureMap& features) {
  if (rule.rows() != anchor.rows() || rule.cols() != features.num_classes()) {
    throw InputError("rule evaluations must be an (instances x classes) table");
  }
  for (double h : rule.data())
    if (!(h >= 0.0 && h <= 1.0)) throw InputError("rule probability outside [0, 1]");
}

// Rows Phi(x, y) scaled by `scale`, instance-major then label ascending.
PiecewiseLinearProblem per_label_rows(const DenseMatrix& anchor, const FeatureMap& features, double scale) {
  const std::size_t classes = features.num_classes();
  const std::size_t block = features.block_size();
  const DenseMatrix psi = features.transform(anchor);
  PiecewiseLinearProblem problem;
  problem.F = DenseMatrix(anchor.rows() * classes, features.size());
  problem.b.assign(anchor.rows() * classes, 0.0);
  problem.origins.resize(anchor.rows() * classes);
  problem.row_weights = DenseMatrix(anchor.rows() * classes, classes);
  const auto s = static_cast<std::ptrdiff_t>(anchor.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < s; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto src = psi.row(i);
    for (std::size_t y = 0; y < classes; ++y) {
      const std::size_t r = i * classes + y;
      auto dst = problem.F.row(r).subspan(y * block, block);
      for (std::size_t j = 0; j < block; ++j) dst[j] = scale * src[j];
      problem.origins[r] = {i, 1u << y};
      problem.row_weights(r, y) = scale;
    }
  }
  problem.instance_features = psi;
  return problem;
}

}  // namespace

PiecewiseLinearProblem build_learning_problem(const UncertaintySet& set, const DenseMatrix& anchor,
                                              const FeatureMap& features) {
  check_set(set, anchor, features);
  const std::size_t classes = features.num_classes();
  if (classes > kMaxEnumeratedClasses) {
    throw InputError("learning problem with " + std::to_string(classes) +
                     " classes exceeds the subset-enumeration cap of " +
                     std::to_string(kMaxEnumeratedClasses) +
                     "; use the top-k objective (subgradient methods without E-ASM)");
  }
  const std::size_t subsets = (std::size_t{1} << classes) - 1;
  const std::size_t block = features.block_size();
  const DenseMatrix psi = features.transform(anchor);

  PiecewiseLinearProblem problem;
  problem.constant = 1.0;
  problem.a.resize(set.size());
  for (std::size_t j = 0; j < set.size(); ++j) problem.a[j] = -set.tau[j];
  problem.lambda = set.lambda;
  problem.F = DenseMatrix(anchor.rows() * subsets, features.size());
  problem.b.assign(anchor.rows() * subsets, 0.0);
  problem.origins.resize(anchor.rows() * subsets);
  problem.row_weights = DenseMatrix(anchor.rows() * subsets, classes);

  const auto s = static_cast<std::ptrdiff_t>(anchor.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < s; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    auto src = psi.row(i);
    for (std::uint32_t mask = 1; mask <= subsets; ++mask) {
      const std::size_t r = i * subsets + (mask - 1);
      const double inv = 1.0 / static_cast<double>(std::popcount(mask));
      auto row = problem.F.row(r);
      for (std::size_t y = 0; y < classes; ++y) {
        if (!(mask & (1u << y))) continue;
        auto dst = row.subspan(y * block, block);
        for (std::size_t j = 0; j < block; ++j) dst[j] = inv * src[j];
        problem.row_weights(r, y) = inv;
      }
      problem.b[r] = -inv;
      problem.origins[r] = {i, mask};
    }
  }
  problem.instance_features = psi;
  return problem;
}

PiecewiseLinearProblem build_upper_bound_problem(const UncertaintySet& set, const DenseMatrix& anchor,
                                                 const FeatureMap& features, const DenseMatrix& rule) {
  check_set(set, anchor, features);
  check_rule(rule, anchor, features);
  PiecewiseLinearProblem problem = per_label_rows(anchor, features, 1.0);
  problem.constant = 1.0;
  problem.a.resize(set.size());
  for (std::size_t j = 0; j < set.size(); ++j) problem.a[j] = -set.tau[j];
  problem.lambda = set.lambda;
  for (std::size_t r = 0; r < problem.b.size(); ++r)
    problem.b[r] = -rule(problem.origins[r].instance, static_cast<std::size_t>(std::countr_zero(problem.origins[r].labels)));
  problem.sense = ObjectiveSense::minimize;
  return problem;
}

PiecewiseLinearProblem build_lower_bound_problem(const UncertaintySet& set, const DenseMatrix& anchor,
                                                 const FeatureMap& features, const DenseMatrix& rule) {
  check_set(set, anchor, features);
  check_rule(rule, anchor, features);
  PiecewiseLinearProblem problem = per_label_rows(anchor, features, -1.0);
  problem.constant = -1.0;
  problem.a = set.tau;
  problem.lambda = set.lambda;
  for (std::size_t r = 0; r < problem.b.size(); ++r)
    problem.b[r] = rule(problem.origins[r].instance, static_cast<std::size_t>(std::countr_zero(problem.origins[r].labels)));
  problem.sense = ObjectiveSense::maximize_negated;
  return problem;
}

PiecewiseObjective::PiecewiseObjective(const PiecewiseLinearProblem& problem)
    : problem_(problem), values_(problem.num_pieces()) {
  problem_.validate();
}

double PiecewiseObjective::evaluate(std::span<const double> mu, std::span<double> subgradient) const {
  kernels::matvec(problem_.F, mu, problem_.b, values_);
  last_row_ = kernels::argmax(values_);
  auto row = problem_.F.row(last_row_);
  double f = values_[last_row_];
  for (std::size_t j = 0; j < mu.size(); ++j) {
    f += problem_.a[j] * mu[j] + problem_.lambda[j] * std::abs(mu[j]);
    subgradient[j] = problem_.a[j] + problem_.lambda[j] * sign(mu[j]) + row[j];
  }
  return f;
}

namespace {

// Adds (1/|C|) sum_{y in C} Phi(x, y) scaled by `weight` into `out`.
void add_subset_row(std::span<const double> psi, const SubsetMax& subset, std::size_t block,
                    std::size_t classes, double weight, std::span<double> out) {
  const double w = weight / static_cast<double>(subset.size);
  for (std::size_t y = 0; y < classes; ++y) {
    if (!(subset.labels & (1u << y))) continue;
    for (std::size_t j = 0; j < block; ++j) out[y * block + j] += w * psi[j];
  }
}

}  // namespace

TopKLearningObjective::TopKLearningObjective(const UncertaintySet& set, const DenseMatrix& anchor,
                                             const FeatureMap& features)
    : tau_(set.tau), lambda_(set.lambda), psi_(features.transform(anchor)), features_(features) {
  check_set(set, anchor, features);
  if (features.num_classes() > 32) throw InputError("at most 32 classes are supported");
}

double TopKLearningObjective::evaluate(std::span<const double> mu, std::span<double> subgradient) const {
  const std::size_t classes = features_.num_classes();
  Vector scores(classes);
  SubsetMax best;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < psi_.rows(); ++i) {
    features_.class_scores(psi_.row(i), mu, scores);
    const SubsetMax s = best_label_subset(scores);
    if (i == 0 || s.value > best.value) {
      best = s;
      best_i = i;
    }
  }
  double f = best.value;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    f += -tau_[j] * mu[j] + lambda_[j] * std::abs(mu[j]);
    subgradient[j] = -tau_[j] + lambda_[j] * sign(mu[j]);
  }
  add_subset_row(psi_.row(best_i), best, features_.block_size(), classes, 1.0, subgradient);
  return f;
}

FixedMarginalObjective::FixedMarginalObjective(const UncertaintySet& set, const DenseMatrix& train_instances,
                                               const FeatureMap& features)
    : tau_(set.tau), lambda_(set.lambda), psi_(features.transform(train_instances)), features_(features) {
  check_set(set, train_instances, features);
  if (features.num_classes() > 32) throw InputError("at most 32 classes are supported");
}

double FixedMarginalObjective::evaluate(std::span<const double> mu, std::span<double> subgradient) const {
  const std::size_t classes = features_.num_classes();
  const double weight = 1.0 / static_cast<double>(psi_.rows());
  Vector scores(classes);
  double f = 0.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    f += -tau_[j] * mu[j] + lambda_[j] * std::abs(mu[j]);
    subgradient[j] = -tau_[j] + lambda_[j] * sign(mu[j]);
  }
  for (std::size_t i = 0; i < psi_.rows(); ++i) {
    features_.class_scores(psi_.row(i), mu, scores);
    const SubsetMax s = best_label_subset(scores);
    f += weight * s.value;
    add_subset_row(psi_.row(i), s, features_.block_size(), classes, weight, subgradient);
  }
  return f;
}

}  // namespace mrc
