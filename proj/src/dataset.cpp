#include "mrc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mrc/errors.hpp"
#include "mrc/random.hpp"

namespace mrc {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::string location(const std::filesystem::path& path, std::size_t row, std::size_t col) {
  std::ostringstream os;
  os << path.string() << ": row " << row << ", column " << col;
  return os.str();
}

}  // namespace

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.instances = instances.select_rows(indices);
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels[i]);
  out.label_names = label_names;
  return out;
}

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes(), 0);
  for (auto y : labels) ++counts[y];
  return counts;
}

Dataset load_csv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file: " + path.string());

  Dataset data;
  std::map<std::string, std::size_t, std::less<>> label_index;
  std::string line;
  std::size_t row = 0;
  std::size_t width = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++row;
    if (has_header && row == 1) continue;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() < 2) throw InputError(location(path, row, 1) + ": need at least one feature and a label");
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw InputError(location(path, row, cells.size()) + ": expected " + std::to_string(width) +
                       " columns, found " + std::to_string(cells.size()));
    }
    values.assign(width - 1, 0.0);
    for (std::size_t c = 0; c + 1 < width; ++c) {
      const auto cell = cells[c];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty()) {
        throw InputError(location(path, row, c + 1) + ": cannot parse '" + std::string(cell) + "' as a real");
      }
      if (!std::isfinite(v)) {
        throw InputError(location(path, row, c + 1) + ": non-finite value '" + std::string(cell) + "'");
      }
      values[c] = v;
    }
    const auto label = cells.back();
    if (label.empty()) throw InputError(location(path, row, width) + ": empty label");
    auto it = label_index.find(label);
    if (it == label_index.end()) {
      it = label_index.emplace(std::string(label), data.label_names.size()).first;
      data.label_names.emplace_back(label);
    }
    data.instances.append_row(values);
    data.labels.push_back(it->second);
  }
  if (data.n() == 0) throw InputError("data file has no samples: " + path.string());
  if (data.num_classes() < 2) {
    throw InputError("data file needs at least 2 distinct labels: " + path.string());
  }
  return data;
}

DenseMatrix load_instances_csv(const std::filesystem::path& path, bool has_header, bool has_label_column) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open data file: " + path.string());
  DenseMatrix out;
  std::string line;
  std::size_t row = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++row;
    if (has_header && row == 1) continue;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    const std::size_t width = cells.size() - (has_label_column ? 1 : 0);
    if (width == 0) throw InputError(location(path, row, 1) + ": no feature columns");
    if (!out.empty() && width != out.cols()) {
      throw InputError(location(path, row, cells.size()) + ": expected " + std::to_string(out.cols()) +
                       " feature columns, found " + std::to_string(width));
    }
    values.assign(width, 0.0);
    for (std::size_t c = 0; c < width; ++c) {
      const auto cell = cells[c];
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || cell.empty() || !std::isfinite(v)) {
        throw InputError(location(path, row, c + 1) + ": cannot parse '" + std::string(cell) + "' as a finite real");
      }
      values[c] = v;
    }
    out.append_row(values);
  }
  if (out.rows() == 0) throw InputError("data file has no rows: " + path.string());
  return out;
}

void write_csv(const Dataset& data, const std::filesystem::path& path, bool with_header) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file: " + path.string());
  char buf[32];
  if (with_header) {
    for (std::size_t j = 0; j < data.d(); ++j) out << 'x' << j << ',';
    out << "label\n";
  }
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < data.d(); ++j) {
      const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, data.instances(i, j));
      out.write(buf, end - buf);
      out << ',';
    }
    out << data.label_names[data.labels[i]] << '\n';
  }
}

NormalizationStats fit_normalizer(const DenseMatrix& train) {
  if (train.rows() == 0) throw InputError("fit_normalizer: empty training set");
  const std::size_t n = train.rows();
  const std::size_t d = train.cols();
  NormalizationStats stats{Vector(d, 0.0), Vector(d, 1.0)};
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += train(i, j);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (train(i, j) - mean) * (train(i, j) - mean);
    // Population deviation so that the normalized training column has unit deviation.
    const double sd = std::sqrt(ss / static_cast<double>(n));
    stats.mean[j] = mean;
    stats.stddev[j] = sd > 0.0 ? sd : 1.0;
  }
  return stats;
}

DenseMatrix apply_normalizer(const NormalizationStats& stats, const DenseMatrix& instances) {
  if (instances.cols() != stats.mean.size()) {
    throw InputError("apply_normalizer: expected " + std::to_string(stats.mean.size()) +
                     " columns, got " + std::to_string(instances.cols()));
  }
  DenseMatrix out(instances.rows(), instances.cols());
  for (std::size_t i = 0; i < instances.rows(); ++i)
    for (std::size_t j = 0; j < instances.cols(); ++j)
      out(i, j) = (instances(i, j) - stats.mean[j]) / stats.stddev[j];
  return out;
}

Dataset apply_normalizer(const NormalizationStats& stats, const Dataset& data) {
  Dataset out = data;
  out.instances = apply_normalizer(stats, data.instances);
  return out;
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& data) {
  std::vector<std::vector<std::size_t>> by_class(data.num_classes());
  for (std::size_t i = 0; i < data.n(); ++i) by_class[data.labels[i]].push_back(i);
  return by_class;
}

}  // namespace

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double test_fraction,
                                             std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw InputError("stratified_split: test fraction must lie in (0, 1)");
  }
  auto by_class = indices_by_class(data);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < 2) {
      throw InputError("stratified_split: class '" + data.label_names[c] + "' has fewer than 2 samples");
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> train_idx, test_idx;
  for (auto& members : by_class) {
    shuffle(std::span<std::size_t>(members), rng);
    auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(members.size())));
    n_test = std::clamp<std::size_t>(n_test, 1, members.size() - 1);
    test_idx.insert(test_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    train_idx.insert(train_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(train_idx.begin(), train_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  return {data.subset(train_idx), data.subset(test_idx)};
}

std::vector<std::size_t> stratified_folds(const Dataset& data, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw InputError("stratified_folds: need at least 2 folds");
  auto by_class = indices_by_class(data);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> fold(data.n(), 0);
  std::size_t next = 0;
  for (auto& members : by_class) {
    shuffle(std::span<std::size_t>(members), rng);
    // Continue the round-robin across classes so fold sizes stay balanced.
    for (auto i : members) fold[i] = next++ % k;
  }
  return fold;
}

}  // namespace mrc
