#ifndef MRC_KERNELS_HPP
#define MRC_KERNELS_HPP

// Dense data-parallel kernels used by the solvers.
//
// Every kernel has an OpenMP version and a `_serial` reference. The parallel
// versions split work by output element only, so each output is produced by
// the same sequence of floating-point operations as the serial reference and
// results are bit-identical regardless of thread count.

#include <cstddef>
#include <span>

#include "mrc/matrix.hpp"

namespace mrc::kernels {

/// out = A x + offset  (offset may be empty)
void matvec(const DenseMatrix& a, std::span<const double> x, std::span<const double> offset,
            std::span<double> out);
void matvec_serial(const DenseMatrix& a, std::span<const double> x,
                   std::span<const double> offset, std::span<double> out);

/// G = A A^T
DenseMatrix gram(const DenseMatrix& a);
DenseMatrix gram_serial(const DenseMatrix& a);

/// G(r, q) = K(inst[r], inst[q]) * <W_r, W_q> for rows of the form
/// F_r = sum_y W(r, y) e_y (x) psi_{inst[r]}, with K the instance Gram matrix.
DenseMatrix structured_gram(const DenseMatrix& instance_gram, std::span<const std::size_t> instance,
                            const DenseMatrix& weights);
DenseMatrix structured_gram_serial(const DenseMatrix& instance_gram, std::span<const std::size_t> instance,
                                   const DenseMatrix& weights);

/// Returns (A diag(scale))^T, i.e. column j of the scaled matrix stored as row j.
DenseMatrix scaled_transpose(const DenseMatrix& a, std::span<const double> scale);
DenseMatrix scaled_transpose_serial(const DenseMatrix& a, std::span<const double> scale);

/// Index of the largest entry; the lowest index wins ties.
std::size_t argmax(std::span<const double> v);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

double dot(std::span<const double> x, std::span<const double> y);

}  // namespace mrc::kernels

#endif  // MRC_KERNELS_HPP
