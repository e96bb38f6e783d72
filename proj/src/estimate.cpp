#include "mrc/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mrc/errors.hpp"
#include "mrc/lp.hpp"

namespace mrc {

std::string to_string(LambdaMode mode) {
  switch (mode) {
    case LambdaMode::hoeffding: return "hoeffding";
    case LambdaMode::bernstein: return "bernstein";
    case LambdaMode::rademacher: return "rademacher";
    case LambdaMode::practical: return "practical";
  }
  return "unknown";
}

LambdaMode parse_lambda_mode(const std::string& name) {
  if (name == "hoeffding") return LambdaMode::hoeffding;
  if (name == "bernstein") return LambdaMode::bernstein;
  if (name == "rademacher") return LambdaMode::rademacher;
  if (name == "practical") return LambdaMode::practical;
  throw InputError("unknown lambda mode '" + name + "'");
}

namespace {

void check_labels(const DenseMatrix& instances, std::span<const std::size_t> labels,
                  const FeatureMap& features) {
  if (instances.rows() == 0) throw InputError("mean vector of an empty sample");
  if (labels.size() != instances.rows()) throw InputError("instance and label counts differ");
  for (auto y : labels)
    if (y >= features.num_classes()) throw InputError("label out of range for the feature map");
}

void check_delta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("delta must lie in (0, 1)");
}

}  // namespace

Vector mean_vector(const DenseMatrix& instances, std::span<const std::size_t> labels,
                   const FeatureMap& features) {
  check_labels(instances, labels, features);
  const std::size_t block = features.block_size();
  Vector tau(features.size(), 0.0);
  Vector psi(block);
  for (std::size_t i = 0; i < instances.rows(); ++i) {
    features.scalar_features(instances.row(i), psi);
    double* dst = tau.data() + labels[i] * block;
    for (std::size_t j = 0; j < block; ++j) dst[j] += psi[j];
  }
  for (double& v : tau) v /= static_cast<double>(instances.rows());
  return tau;
}

SampleMoments sample_moments(const DenseMatrix& instances, std::span<const std::size_t> labels,
                             const FeatureMap& features) {
  check_labels(instances, labels, features);
  const std::size_t n = instances.rows();
  if (n < 2) throw InputError("sample variance needs at least 2 samples");
  const std::size_t block = features.block_size();
  const DenseMatrix psi = features.transform(instances);
  SampleMoments out{mean_vector(instances, labels, features), Vector(features.size(), 0.0)};
  // Phi_i is psi_j on samples of class y(i) and 0 elsewhere.
  std::vector<std::size_t> counts(features.num_classes(), 0);
  for (auto y : labels) ++counts[y];
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = labels[i];
    const double* mean = out.tau.data() + y * block;
    double* acc = out.variance.data() + y * block;
    auto row = psi.row(i);
    for (std::size_t j = 0; j < block; ++j) acc[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
  }
  for (std::size_t y = 0; y < features.num_classes(); ++y) {
    const double others = static_cast<double>(n - counts[y]);
    for (std::size_t j = 0; j < block; ++j) {
      const std::size_t c = y * block + j;
      out.variance[c] = (out.variance[c] + others * out.tau[c] * out.tau[c]) / static_cast<double>(n - 1);
    }
  }
  return out;
}

SampleMoments column_moments(const DenseMatrix& phi_rows) {
  const std::size_t n = phi_rows.rows();
  if (n == 0) throw InputError("mean vector of an empty sample");
  if (n < 2) throw InputError("sample variance needs at least 2 samples");
  SampleMoments out{Vector(phi_rows.cols(), 0.0), Vector(phi_rows.cols(), 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < phi_rows.cols(); ++j) out.tau[j] += phi_rows(i, j);
  for (double& v : out.tau) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < phi_rows.cols(); ++j) {
      const double e = phi_rows(i, j) - out.tau[j];
      out.variance[j] += e * e;
    }
  for (double& v : out.variance) v /= static_cast<double>(n - 1);
  return out;
}

double lambda_hoeffding(double feature_bound, std::size_t family_size, std::size_t num_classes,
                        double delta, std::size_t n) {
  check_delta(delta);
  if (!(feature_bound > 0.0) || family_size == 0 || num_classes == 0 || n == 0) {
    throw InputError("lambda_hoeffding: need C > 0, |F| >= 1, |Y| >= 1, n >= 1");
  }
  const double log_term =
      std::log(2.0 * static_cast<double>(family_size) * static_cast<double>(num_classes) / delta);
  return feature_bound * std::sqrt(2.0 * log_term / static_cast<double>(n));
}

Vector lambda_bernstein(double feature_bound, std::size_t family_size, std::size_t num_classes,
                        double delta, std::size_t n, std::span<const double> variance) {
  check_delta(delta);
  if (n < 2) throw InputError("lambda_bernstein: need n >= 2");
  if (!(feature_bound > 0.0) || family_size == 0 || num_classes == 0) {
    throw InputError("lambda_bernstein: need C > 0, |F| >= 1, |Y| >= 1");
  }
  const double log_term =
      std::log(4.0 * static_cast<double>(family_size) * static_cast<double>(num_classes) / delta);
  const double nd = static_cast<double>(n);
  const double second = 14.0 * feature_bound * log_term / (3.0 * (nd - 1.0));
  Vector lambda(variance.size());
  for (std::size_t i = 0; i < variance.size(); ++i) {
    if (variance[i] < 0.0) throw InputError("lambda_bernstein: negative variance");
    lambda[i] = 2.0 * feature_bound * std::sqrt(2.0 * variance[i] * log_term / nd) + second;
  }
  return lambda;
}

Vector lambda_rademacher(double feature_bound, double rademacher_r, double delta, std::size_t n,
                         std::span<const std::size_t> class_counts,
                         std::span<const std::size_t> component_class) {
  check_delta(delta);
  if (!(rademacher_r > 0.0)) throw InputError("lambda_rademacher: need R > 0");
  if (n == 0) throw InputError("lambda_rademacher: need n >= 1");
  std::size_t total = 0;
  for (auto c : class_counts) total += c;
  if (total != n) throw InputError("lambda_rademacher: class counts must sum to n");
  const double nd = static_cast<double>(n);
  const double conf = std::sqrt(std::log(4.0 * static_cast<double>(class_counts.size()) / delta) / (2.0 * nd));
  Vector lambda(component_class.size());
  for (std::size_t i = 0; i < component_class.size(); ++i) {
    const std::size_t j = component_class[i];
    if (j >= class_counts.size()) {
      throw InputError("lambda_rademacher: component " + std::to_string(i) + " maps to no class");
    }
    const double share = std::sqrt(static_cast<double>(class_counts[j]) / nd);
    lambda[i] = 2.0 * share * rademacher_r / std::sqrt(nd) + feature_bound * (1.0 + 2.0 * share) * conf;
  }
  return lambda;
}

Vector lambda_practical(double lambda0, std::span<const double> variance, std::size_t n) {
  if (lambda0 < 0.0) throw InputError("lambda_practical: lambda0 must be nonnegative");
  if (n < 2) throw InputError("lambda_practical: need n >= 2");
  Vector lambda(variance.size());
  for (std::size_t i = 0; i < variance.size(); ++i) {
    if (variance[i] < 0.0) throw InputError("lambda_practical: negative variance");
    lambda[i] = lambda0 * std::sqrt(variance[i] / static_cast<double>(n));
  }
  return lambda;
}

std::vector<std::size_t> component_classes(const FeatureMap& features) {
  std::vector<std::size_t> owner(features.size());
  for (std::size_t i = 0; i < owner.size(); ++i) owner[i] = i / features.block_size();
  return owner;
}

UncertaintySet estimate_uncertainty(const DenseMatrix& instances, std::span<const std::size_t> labels,
                                    const FeatureMap& features, const EstimateOptions& options) {
  UncertaintySet set;
  const std::size_t n = instances.rows();
  set.provenance.mode = options.mode;
  set.provenance.delta = options.delta;
  set.provenance.lambda0 = options.lambda0;
  set.provenance.feature_bound = features.feature_bound();
  set.provenance.family_size = features.block_size();
  set.provenance.rademacher_r = options.rademacher_r;
  const std::size_t classes = features.num_classes();
  switch (options.mode) {
    case LambdaMode::hoeffding: {
      set.tau = mean_vector(instances, labels, features);
      const double w = lambda_hoeffding(features.feature_bound(), features.block_size(), classes,
                                        options.delta, n);
      set.lambda.assign(set.tau.size(), w);
      break;
    }
    case LambdaMode::bernstein: {
      auto moments = sample_moments(instances, labels, features);
      set.tau = std::move(moments.tau);
      set.lambda = lambda_bernstein(features.feature_bound(), features.block_size(), classes,
                                    options.delta, n, moments.variance);
      break;
    }
    case LambdaMode::rademacher: {
      set.tau = mean_vector(instances, labels, features);
      std::vector<std::size_t> counts(classes, 0);
      for (auto y : labels) ++counts[y];
      set.lambda = lambda_rademacher(features.feature_bound(), options.rademacher_r, options.delta, n,
                                     counts, component_classes(features));
      break;
    }
    case LambdaMode::practical: {
      auto moments = sample_moments(instances, labels, features);
      set.tau = std::move(moments.tau);
      set.lambda = lambda_practical(options.lambda0, moments.variance, n);
      break;
    }
  }
  return set;
}

namespace {

// Columns: one probability per achievable feature vector, then the widenings
// l1 (below tau) and l2 (above tau) on top of lambda.
UncertaintySet repair(const UncertaintySet& set, std::size_t num_points,
                      const std::function<void(std::size_t, std::span<double>)>& fill_column) {
  const std::size_t m = set.size();
  if (set.lambda.size() != m) throw InputError("ensure_feasible: tau and lambda lengths differ");
  if (num_points == 0) throw InputError("ensure_feasible: no instances");
  lp::LinearProgram program;
  const std::size_t cols = num_points + 2 * m;
  program.constraints = DenseMatrix(2 * m + 1, cols);
  program.rhs.assign(2 * m + 1, 0.0);
  program.relations.assign(2 * m + 1, lp::Relation::equal);
  program.cost.assign(cols, 0.0);
  Vector phi(m);
  for (std::size_t k = 0; k < num_points; ++k) {
    fill_column(k, phi);
    for (std::size_t i = 0; i < m; ++i) {
      program.constraints(i, k) = phi[i];
      program.constraints(m + i, k) = phi[i];
    }
    program.constraints(2 * m, k) = 1.0;
  }
  for (std::size_t i = 0; i < m; ++i) {
    program.constraints(i, num_points + i) = 1.0;       // E phi + l1 >= tau - lambda
    program.rhs[i] = set.tau[i] - set.lambda[i];
    program.relations[i] = lp::Relation::greater_equal;
    program.constraints(m + i, num_points + m + i) = -1.0;  // E phi - l2 <= tau + lambda
    program.rhs[m + i] = set.tau[i] + set.lambda[i];
    program.relations[m + i] = lp::Relation::less_equal;
    program.cost[num_points + i] = 1.0;
    program.cost[num_points + m + i] = 1.0;
  }
  program.rhs[2 * m] = 1.0;

  const auto result = lp::solve(program);
  if (result.status != lp::Status::optimal) {
    throw SolverError(SolverError::Kind::infeasible,
                      "ensure_feasible: LP finished with status " + lp::to_string(result.status));
  }
  UncertaintySet out = set;
  bool changed = false;
  for (std::size_t i = 0; i < m; ++i) {
    // Widenings below the LP feasibility tolerance are round-off.
    const double l1 = result.x[num_points + i] > 1e-9 ? result.x[num_points + i] : 0.0;
    const double l2 = result.x[num_points + m + i] > 1e-9 ? result.x[num_points + m + i] : 0.0;
    if (l1 > 0.0 || l2 > 0.0) changed = true;
    out.tau[i] = set.tau[i] + (l2 - l1) / 2.0;
    out.lambda[i] = set.lambda[i] + (l1 + l2) / 2.0;
  }
  out.provenance.repaired = set.provenance.repaired || changed;
  return out;
}

}  // namespace

UncertaintySet ensure_feasible(const UncertaintySet& set, const DenseMatrix& instances,
                               const FeatureMap& features) {
  if (set.size() != features.size()) throw InputError("ensure_feasible: set and feature map sizes differ");
  const DenseMatrix psi = features.transform(instances);
  const std::size_t classes = features.num_classes();
  const std::size_t block = features.block_size();
  return repair(set, instances.rows() * classes, [&](std::size_t k, std::span<double> phi) {
    std::fill(phi.begin(), phi.end(), 0.0);
    const std::size_t x = k / classes;
    const std::size_t y = k % classes;
    auto row = psi.row(x);
    std::copy(row.begin(), row.end(), phi.begin() + static_cast<std::ptrdiff_t>(y * block));
  });
}

UncertaintySet ensure_feasible(const UncertaintySet& set, const DenseMatrix& achievable_phi) {
  if (achievable_phi.cols() != set.size()) throw InputError("ensure_feasible: feature length mismatch");
  return repair(set, achievable_phi.rows(), [&](std::size_t k, std::span<double> phi) {
    auto row = achievable_phi.row(k);
    std::copy(row.begin(), row.end(), phi.begin());
  });
}

}  // namespace mrc
