#include "mrc/features.hpp"

#include <cmath>

#include "mrc/errors.hpp"
#include "mrc/random.hpp"

namespace mrc {

std::string to_string(FeatureKind kind) {
  return kind == FeatureKind::identity ? "identity" : "rff";
}

FeatureKind parse_feature_kind(const std::string& name) {
  if (name == "identity") return FeatureKind::identity;
  if (name == "rff" || name == "random_fourier") return FeatureKind::random_fourier;
  throw InputError("unknown feature kind '" + name + "' (expected rff or identity)");
}

FeatureMap::FeatureMap(FeatureMapSpec spec) : spec_(spec) {
  if (spec_.num_classes < 2) throw InputError("feature map needs at least 2 classes");
  if (spec_.input_dim == 0) throw InputError("feature map needs a positive input dimension");
  const std::size_t extra = spec_.constant_feature ? 1 : 0;
  if (spec_.kind == FeatureKind::identity) {
    block_ = spec_.input_dim + extra;
    return;
  }
  if (spec_.num_frequencies == 0) throw InputError("random Fourier features need D >= 1");
  if (spec_.sigma == 0.0) spec_.sigma = std::sqrt(static_cast<double>(spec_.input_dim) / 2.0);
  if (!(spec_.sigma > 0.0)) throw InputError("kernel scale sigma must be positive");
  spec_.feature_bound = 1.0;
  block_ = 2 * spec_.num_frequencies + extra;

  // u_i ~ N(0, sigma^-2 I)
  frequencies_ = DenseMatrix(spec_.num_frequencies, spec_.input_dim);
  NormalSampler normal(spec_.seed);
  for (std::size_t i = 0; i < spec_.num_frequencies; ++i)
    for (std::size_t j = 0; j < spec_.input_dim; ++j) frequencies_(i, j) = normal() / spec_.sigma;
}

void FeatureMap::scalar_features(std::span<const double> x, std::span<double> out) const {
  if (x.size() != spec_.input_dim) {
    throw InputError("instance has dimension " + std::to_string(x.size()) + ", feature map expects " +
                     std::to_string(spec_.input_dim));
  }
  std::size_t k = 0;
  if (spec_.constant_feature) out[k++] = 1.0;
  if (spec_.kind == FeatureKind::identity) {
    for (double v : x) out[k++] = v;
    return;
  }
  for (std::size_t i = 0; i < spec_.num_frequencies; ++i) {
    double proj = 0.0;
    auto u = frequencies_.row(i);
    for (std::size_t j = 0; j < x.size(); ++j) proj += u[j] * x[j];
    out[k++] = std::cos(proj);
    out[k++] = std::sin(proj);
  }
}

Vector FeatureMap::scalar_features(std::span<const double> x) const {
  Vector out(block_);
  scalar_features(x, out);
  return out;
}

Vector FeatureMap::operator()(std::span<const double> x, std::size_t y) const {
  if (y >= spec_.num_classes) {
    throw InputError("class index " + std::to_string(y) + " out of range for " +
                     std::to_string(spec_.num_classes) + " classes");
  }
  Vector phi(size(), 0.0);
  scalar_features(x, std::span<double>(phi).subspan(y * block_, block_));
  return phi;
}

void FeatureMap::class_scores(std::span<const double> psi, std::span<const double> mu,
                              std::span<double> scores) const {
  for (std::size_t y = 0; y < spec_.num_classes; ++y) {
    double s = 0.0;
    const double* block = mu.data() + y * block_;
    for (std::size_t j = 0; j < block_; ++j) s += psi[j] * block[j];
    scores[y] = s;
  }
}

DenseMatrix FeatureMap::transform(const DenseMatrix& instances) const {
  DenseMatrix out(instances.rows(), block_);
  const auto n = static_cast<std::ptrdiff_t>(instances.rows());
  // Validate once so the parallel region never throws.
  if (n > 0 && instances.cols() != spec_.input_dim) {
    throw InputError("instances have dimension " + std::to_string(instances.cols()) +
                     ", feature map expects " + std::to_string(spec_.input_dim));
  }
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    scalar_features(instances.row(static_cast<std::size_t>(i)), out.row(static_cast<std::size_t>(i)));
  return out;
}

FeatureMapSpec identity_spec(const DenseMatrix& train, std::size_t num_classes, bool constant_feature) {
  FeatureMapSpec spec;
  spec.kind = FeatureKind::identity;
  spec.num_classes = num_classes;
  spec.input_dim = train.cols();
  spec.num_frequencies = 0;
  spec.constant_feature = constant_feature;
  double bound = constant_feature ? 1.0 : 0.0;
  for (double v : train.data()) bound = std::max(bound, std::abs(v));
  spec.feature_bound = bound > 0.0 ? bound : 1.0;
  return spec;
}

FeatureMapSpec fourier_spec(std::size_t input_dim, std::size_t num_classes, std::size_t num_frequencies,
                            double sigma, std::uint64_t seed, bool constant_feature) {
  FeatureMapSpec spec;
  spec.kind = FeatureKind::random_fourier;
  spec.num_classes = num_classes;
  spec.input_dim = input_dim;
  spec.num_frequencies = num_frequencies;
  spec.sigma = sigma > 0.0 ? sigma : std::sqrt(static_cast<double>(input_dim) / 2.0);
  spec.seed = seed;
  spec.constant_feature = constant_feature;
  spec.feature_bound = 1.0;
  return spec;
}

}  // namespace mrc
