#ifndef MSMAAD_LINALG_HPP
#define MSMAAD_LINALG_HPP

#include "msmaad/core.hpp"

namespace msmaad::linalg {

// Reciprocal condition estimate below which a Cholesky factorisation is
// treated as singular.
inline constexpr double kSingularRcond = 1e-13;

// Solves A x = b for symmetric positive-definite A via Cholesky.
// Throws NumericalError when A is not numerically positive definite.
Vector solve_spd(const Matrix& a, const Vector& b);

// Minimum-norm minimiser of sum_t w_t (y_t - x_t^T beta)^2 via a complete
// orthogonal decomposition; defined for rank-deficient weighted designs.
Vector weighted_min_norm_lstsq(const Matrix& x, const Vector& y, const Vector& w);

// Sum_t w_t x_t x_t^T over the rows of `x`.
Matrix weighted_gram(const Matrix& x, const Vector& w);

}  // namespace msmaad::linalg

#endif  // MSMAAD_LINALG_HPP
