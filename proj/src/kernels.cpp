#include "mrc/kernels.hpp"

#include <stdexcept>

namespace mrc::kernels {

namespace {

void check_matvec(const DenseMatrix& a, std::span<const double> x, std::span<const double> offset,
                  std::span<double> out) {
  if (x.size() != a.cols() || out.size() != a.rows() ||
      (!offset.empty() && offset.size() != a.rows())) {
    throw std::invalid_argument("matvec: dimension mismatch");
  }
}

inline double row_dot(const double* r, const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) acc += r[j] * x[j];
  return acc;
}

}  // namespace

void matvec(const DenseMatrix& a, std::span<const double> x, std::span<const double> offset,
            std::span<double> out) {
  check_matvec(a, x, offset, out);
  const auto rows = static_cast<std::ptrdiff_t>(a.rows());
  const std::size_t cols = a.cols();
  const double* base = a.data().data();
  const bool has_offset = !offset.empty();
#pragma omp parallel for schedule(static) if (rows * static_cast<std::ptrdiff_t>(cols) > 65536)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    const double v = row_dot(base + i * cols, x.data(), cols);
    out[i] = has_offset ? v + offset[i] : v;
  }
}

void matvec_serial(const DenseMatrix& a, std::span<const double> x,
                   std::span<const double> offset, std::span<double> out) {
  check_matvec(a, x, offset, out);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double v = row_dot(a.row(i).data(), x.data(), a.cols());
    out[i] = offset.empty() ? v : v + offset[i];
  }
}

DenseMatrix gram(const DenseMatrix& a) {
  const std::size_t p = a.rows();
  const std::size_t m = a.cols();
  DenseMatrix g(p, p);
  // Upper triangle by row blocks; dynamic schedule balances the triangle.
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(p); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* ri = a.row(i).data();
    for (std::size_t j = i; j < p; ++j) g(i, j) = row_dot(ri, a.row(j).data(), m);
  }
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

DenseMatrix gram_serial(const DenseMatrix& a) {
  const std::size_t p = a.rows();
  DenseMatrix g(p, p);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = i; j < p; ++j) g(i, j) = g(j, i) = row_dot(a.row(i).data(), a.row(j).data(), a.cols());
  return g;
}

namespace {

void check_structured(const DenseMatrix& k, std::span<const std::size_t> instance, const DenseMatrix& w) {
  if (k.rows() != k.cols() || instance.size() != w.rows()) {
    throw std::invalid_argument("structured_gram: dimension mismatch");
  }
  for (std::size_t i : instance)
    if (i >= k.rows()) throw std::invalid_argument("structured_gram: instance index out of range");
}

}  // namespace

DenseMatrix structured_gram(const DenseMatrix& instance_gram, std::span<const std::size_t> instance,
                            const DenseMatrix& weights) {
  check_structured(instance_gram, instance, weights);
  const std::size_t p = weights.rows();
  const std::size_t c = weights.cols();
  DenseMatrix g(p, p);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t rr = 0; rr < static_cast<std::ptrdiff_t>(p); ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    const double* wr = weights.row(r).data();
    const auto krow = instance_gram.row(instance[r]);
    auto out = g.row(r);
    for (std::size_t q = 0; q < p; ++q) out[q] = krow[instance[q]] * row_dot(wr, weights.row(q).data(), c);
  }
  return g;
}

DenseMatrix structured_gram_serial(const DenseMatrix& instance_gram, std::span<const std::size_t> instance,
                                   const DenseMatrix& weights) {
  check_structured(instance_gram, instance, weights);
  const std::size_t p = weights.rows();
  DenseMatrix g(p, p);
  for (std::size_t r = 0; r < p; ++r)
    for (std::size_t q = 0; q < p; ++q)
      g(r, q) = instance_gram(instance[r], instance[q]) * row_dot(weights.row(r).data(), weights.row(q).data(),
                                                                  weights.cols());
  return g;
}

DenseMatrix scaled_transpose(const DenseMatrix& a, std::span<const double> scale) {
  if (scale.size() != a.cols()) throw std::invalid_argument("scaled_transpose: dimension mismatch");
  DenseMatrix t(a.cols(), a.rows());
  const auto m = static_cast<std::ptrdiff_t>(a.cols());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t j = 0; j < m; ++j) {
    auto out = t.row(static_cast<std::size_t>(j));
    for (std::size_t i = 0; i < a.rows(); ++i) out[i] = a(i, j) * scale[j];
  }
  return t;
}

DenseMatrix scaled_transpose_serial(const DenseMatrix& a, std::span<const double> scale) {
  if (scale.size() != a.cols()) throw std::invalid_argument("scaled_transpose: dimension mismatch");
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j) * scale[j];
  return t;
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

}  // namespace mrc::kernels
