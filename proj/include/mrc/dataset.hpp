#ifndef MRC_DATASET_HPP
#define MRC_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "mrc/matrix.hpp"

namespace mrc {

/// Tabular classification data. Class indices are 0-based; class c is the
/// label named label_names[c], in order of first appearance in the source.
struct Dataset {
  DenseMatrix instances;
  std::vector<std::size_t> labels;
  std::vector<std::string> label_names;

  std::size_t n() const noexcept { return instances.rows(); }
  std::size_t d() const noexcept { return instances.cols(); }
  std::size_t num_classes() const noexcept { return label_names.size(); }

  /// Rows `indices` with the same label vocabulary.
  Dataset subset(std::span<const std::size_t> indices) const;
  std::vector<std::size_t> class_counts() const;
};

/// Reads comma-separated reals with the label in the last column.
/// Throws InputError naming the row and column of the first bad cell.
Dataset load_csv(const std::filesystem::path& path, bool has_header);
/// Reads instances only. With `has_label_column` the last column is skipped.
DenseMatrix load_instances_csv(const std::filesystem::path& path, bool has_header, bool has_label_column);

void write_csv(const Dataset& data, const std::filesystem::path& path, bool with_header);

/// Per-column standardization fitted on training data.
struct NormalizationStats {
  Vector mean;
  Vector stddev;  // strictly positive; constant columns get 1
};

NormalizationStats fit_normalizer(const DenseMatrix& train);
DenseMatrix apply_normalizer(const NormalizationStats& stats, const DenseMatrix& instances);
Dataset apply_normalizer(const NormalizationStats& stats, const Dataset& data);

/// Per class, round(test_fraction * n_c) samples go to the test side.
std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed);

/// Fold id in [0, k) per sample, stratified by class.
std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t k, std::uint64_t seed);

}  // namespace mrc

#endif  // MRC_DATASET_HPP
