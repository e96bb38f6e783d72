#ifndef MRC_TESTS_SUPPORT_HPP
#define MRC_TESTS_SUPPORT_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <string>

#include <unistd.h>

#include "mrc/dataset.hpp"
#include "mrc/objective.hpp"
#include "mrc/random.hpp"
#include "oracles.hpp"

#ifndef MRC_TEST_DATA_DIR
#define MRC_TEST_DATA_DIR "tests/data"
#endif

namespace testing {

inline std::filesystem::path fixture(const std::string& name) {
  return std::filesystem::path(MRC_TEST_DATA_DIR) / name;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("mrc_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Isotropic Gaussian blobs with class centers on a circle of radius `spread`.
inline mrc::Dataset blobs(std::size_t n, std::size_t classes, std::size_t d, double spread, std::uint64_t seed) {
  mrc::NormalSampler normal(seed);
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  mrc::Dataset data;
  data.instances = mrc::DenseMatrix(n, d);
  data.labels.resize(n);
  for (std::size_t c = 0; c < classes; ++c) data.label_names.push_back("c" + std::to_string(c));
  for (std::size_t i = 0; i < n; ++i) {
    // The first `classes` samples cover every class once.
    const std::size_t y = i < classes ? i : static_cast<std::size_t>(mrc::uniform_index(rng, classes));
    data.labels[i] = y;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(y) / static_cast<double>(classes);
    for (std::size_t j = 0; j < d; ++j) {
      double center = 0.0;
      if (j == 0) center = spread * std::cos(angle);
      if (j == 1) center = spread * std::sin(angle);
      data.instances(i, j) = center + normal();
    }
  }
  return data;
}

inline mrc::PiecewiseLinearProblem to_problem(const oracle::RandomProblem& r) {
  mrc::PiecewiseLinearProblem pr;
  pr.a = r.a;
  pr.lambda = r.lambda;
  pr.b = r.b;
  pr.F = mrc::DenseMatrix(r.p, r.m);
  std::copy(r.F.begin(), r.F.end(), pr.F.data().begin());
  pr.constant = 0.0;
  return pr;
}

/// max_j |x_j - y_j| / max_j max(|x_j|, |y_j|); 0 when both vectors are zero.
inline double relative_difference(std::span<const double> x, std::span<const double> y) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    diff = std::max(diff, std::abs(x[j] - y[j]));
    scale = std::max({scale, std::abs(x[j]), std::abs(y[j])});
  }
  return scale == 0.0 ? diff : diff / scale;
}

}  // namespace testing

#endif  // MRC_TESTS_SUPPORT_HPP
