#include "msmaad/linalg.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <sstream>

namespace msmaad::linalg {

Vector solve_spd(const Matrix& a, const Vector& b) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("normal-equation matrix is not positive definite");
  }
  const double rcond = llt.rcond();
  if (!(rcond > kSingularRcond)) {
    std::ostringstream os;
    os << "normal-equation matrix is numerically singular (rcond=" << rcond << ")";
    throw NumericalError(os.str());
  }
  Vector x = llt.solve(b);
  if (!x.allFinite()) throw NumericalError("normal-equation solve produced non-finite values");
  return x;
}

Vector weighted_min_norm_lstsq(const Matrix& x, const Vector& y, const Vector& w) {
  const Eigen::ArrayXd sw = w.array().max(0.0).sqrt();
  const Eigen::MatrixXd a = x.array().colwise() * sw;
  const Eigen::VectorXd b = y.array() * sw;
  Vector beta = a.completeOrthogonalDecomposition().solve(b);
  if (!beta.allFinite()) throw NumericalError("least-squares solve produced non-finite values");
  return beta;
}

Matrix weighted_gram(const Matrix& x, const Vector& w) {
  const Matrix xw = x.array().colwise() * w.array();
  Matrix gram = x.transpose() * xw;
  // Symmetrise rounding differences between the two triangles.
  return 0.5 * (gram + gram.transpose());
}

}  // namespace msmaad::linalg
