#include "gpbounds/numerics.hpp"

#include <cmath>

namespace gpb::numerics {

CholeskyFactor cholesky(const Eigen::MatrixXd& K, double shift) {
  if (K.rows() != K.cols())
    throw std::invalid_argument("cholesky: matrix must be square");
  if (K.rows() == 0)
    throw std::invalid_argument("cholesky: matrix must be non-empty");
  if (!(shift >= 0.0))
    throw std::invalid_argument("cholesky: shift must be non-negative");

  Eigen::MatrixXd A = K;
  A.diagonal().array() += shift;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success)
    throw FactorizationFailure(
        "cholesky: K + shift*I is not (numerically) positive definite");

  CholeskyFactor F;
  F.L = llt.matrixL();
  F.shift = shift;
  // LLT only succeeds with positive pivots, but NaN inputs can slip through
  // some BLAS paths; reject anything that is not strictly positive.
  for (Eigen::Index i = 0; i < F.L.rows(); ++i)
    if (!(F.L(i, i) > 0.0))
      throw FactorizationFailure("cholesky: non-positive pivot encountered");
  return F;
}

double logdet(const CholeskyFactor& F) {
  return 2.0 * F.L.diagonal().array().log().sum();
}

Eigen::VectorXd solve(const CholeskyFactor& F, const Eigen::VectorXd& b) {
  if (b.size() != F.dim())
    throw std::invalid_argument("solve: right-hand side dimension mismatch");
  Eigen::VectorXd x = F.L.triangularView<Eigen::Lower>().solve(b);
  F.L.triangularView<Eigen::Lower>().adjoint().solveInPlace(x);
  return x;
}

Eigen::MatrixXd solve(const CholeskyFactor& F, const Eigen::MatrixXd& B) {
  if (B.rows() != F.dim())
    throw std::invalid_argument("solve: right-hand side dimension mismatch");
  Eigen::MatrixXd X = F.L.triangularView<Eigen::Lower>().solve(B);
  F.L.triangularView<Eigen::Lower>().adjoint().solveInPlace(X);
  return X;
}

void solve_in_place_lower(const CholeskyFactor& F, Eigen::Ref<Eigen::MatrixXd> B) {
  if (B.rows() != F.dim())
    throw std::invalid_argument("solve_in_place_lower: dimension mismatch");
  F.L.triangularView<Eigen::Lower>().solveInPlace(B);
}

void solve_in_place_upper(const CholeskyFactor& F, Eigen::Ref<Eigen::MatrixXd> B) {
  if (B.rows() != F.dim())
    throw std::invalid_argument("solve_in_place_upper: dimension mismatch");
  F.L.triangularView<Eigen::Lower>().adjoint().solveInPlace(B);
}

double inv_spectral_norm(const CholeskyFactor& F) {
  // lambda_min(K + shift I) = lambda_min(L L^T); reconstructing L L^T keeps
  // the result consistent with the factor even under round-off.
  Eigen::MatrixXd A = F.L * F.L.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw FactorizationFailure("inv_spectral_norm: eigendecomposition failed");
  const double lambda_min = es.eigenvalues()(0);  // ascending order
  if (!(lambda_min > 0.0))
    throw FactorizationFailure("inv_spectral_norm: non-positive eigenvalue");
  return 1.0 / lambda_min;
}

}  // namespace gpb::numerics
