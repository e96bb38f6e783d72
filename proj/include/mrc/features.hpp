#ifndef MRC_FEATURES_HPP
#define MRC_FEATURES_HPP

#include <cstdint>
#include <span>
#include <string>

#include "mrc/matrix.hpp"

namespace mrc {

enum class FeatureKind { identity, random_fourier };

std::string to_string(FeatureKind kind);
FeatureKind parse_feature_kind(const std::string& name);

/// Serializable description of a feature mapping. Frequencies are not part
/// of the spec; they are regenerated from `seed`.
struct FeatureMapSpec {
  FeatureKind kind = FeatureKind::random_fourier;
  std::size_t num_classes = 2;
  std::size_t input_dim = 0;  // d
  std::size_t num_frequencies = 500;  // D, random_fourier only
  double sigma = 0.0;  // kernel scale; 0 selects sqrt(d/2)
  std::uint64_t seed = 0;
  bool constant_feature = false;  // prepend a constant-1 scalar feature
  double feature_bound = 1.0;  // C with |psi(x)| <= C

  friend bool operator==(const FeatureMapSpec&, const FeatureMapSpec&) = default;
};

/// Phi(x, y) = e_y (x) Psi(x): one block of scalar features per class.
class FeatureMap {
 public:
  explicit FeatureMap(FeatureMapSpec spec);

  const FeatureMapSpec& spec() const noexcept { return spec_; }
  std::size_t num_classes() const noexcept { return spec_.num_classes; }
  std::size_t input_dim() const noexcept { return spec_.input_dim; }
  /// Number of scalar features per block (|F| for the confidence formulas).
  std::size_t block_size() const noexcept { return block_; }
  /// m = |Y| * block_size()
  std::size_t size() const noexcept { return block_ * spec_.num_classes; }
  double sigma() const noexcept { return spec_.sigma; }
  double feature_bound() const noexcept { return spec_.feature_bound; }
  const DenseMatrix& frequencies() const noexcept { return frequencies_; }

  void scalar_features(std::span<const double> x, std::span<double> out) const;
  Vector scalar_features(std::span<const double> x) const;

  /// Dense Phi(x, y); `y` is a 0-based class index.
  Vector operator()(std::span<const double> x, std::size_t y) const;

  /// Phi(x, y)^T mu for every class y, given Psi(x).
  void class_scores(std::span<const double> psi, std::span<const double> mu,
                    std::span<double> scores) const;

  /// Psi for every row of `instances`.
  DenseMatrix transform(const DenseMatrix& instances) const;

 private:
  FeatureMapSpec spec_;
  std::size_t block_ = 0;
  DenseMatrix frequencies_;  // D x d
};

/// Spec for identity features with C = max |x_j| over `train` (at least the
/// constant feature's 1 when that is enabled).
FeatureMapSpec identity_spec(const DenseMatrix& train, std::size_t num_classes,
                             bool constant_feature = false);

FeatureMapSpec fourier_spec(std::size_t input_dim, std::size_t num_classes,
                            std::size_t num_frequencies, double sigma, std::uint64_t seed,
                            bool constant_feature = false);

}  // namespace mrc

#endif  // MRC_FEATURES_HPP
