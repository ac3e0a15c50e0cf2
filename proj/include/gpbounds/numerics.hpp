#pragma once

// Dense symmetric linear algebra shared by the regression and bound code:
// shifted Cholesky factorization, log-determinant, linear solves, and the
// spectral norm of (K + shift I)^{-1} (= 1 / smallest eigenvalue).
//
// Everything is plain dense double-precision arithmetic; the matrices in
// this project stay small (N <= a few hundred).

#include <Eigen/Dense>
#include <stdexcept>

namespace gpb::numerics {

// Raised when a matrix that must be positive definite is not (numerically).
struct FactorizationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lower-triangular Cholesky factor of A = K + shift*I, i.e. L L^T = A with
// strictly positive diagonal.
struct CholeskyFactor {
  Eigen::MatrixXd L;   // lower triangular
  double shift = 0.0;  // diagonal shift applied before factoring
  Eigen::Index dim() const { return L.rows(); }
};

// Factors K + shift*I. K must be symmetric and the shifted matrix positive
// definite; otherwise FactorizationFailure is thrown.
CholeskyFactor cholesky(const Eigen::MatrixXd& K, double shift);

// log det(K + shift*I) = 2 * sum(log diag(L)).
double logdet(const CholeskyFactor& F);

// Solves (K + shift*I) x = b. Throws std::invalid_argument on dimension
// mismatch. The matrix overload solves column-by-column.
Eigen::VectorXd solve(const CholeskyFactor& F, const Eigen::VectorXd& b);
Eigen::MatrixXd solve(const CholeskyFactor& F, const Eigen::MatrixXd& B);

// In-place half-solves used by batched queries:
//   B := L^{-1} B   (forward)     and     B := L^{-T} B   (backward).
void solve_in_place_lower(const CholeskyFactor& F, Eigen::Ref<Eigen::MatrixXd> B);
void solve_in_place_upper(const CholeskyFactor& F, Eigen::Ref<Eigen::MatrixXd> B);

// Spectral norm of (K + shift*I)^{-1}, computed as 1 / lambda_min(L L^T) via
// a full symmetric eigendecomposition. For positive semi-definite K this is
// bounded by 1/shift.
double inv_spectral_norm(const CholeskyFactor& F);

}  // namespace gpb::numerics
