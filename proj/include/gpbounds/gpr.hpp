#pragma once

// Exact Gaussian-process regression with zero prior mean:
//   mu_N(x)     = k_N(x)^T (K_N + lambda I)^{-1} y_N
//   sigma2_N(x) = k(x, x) - k_N(x)^T (K_N + lambda I)^{-1} k_N(x)
// where lambda > 0 is the nominal noise variance assumed in the likelihood
// (a free tuning parameter, deliberately decoupled from the true noise).

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "gpbounds/kernels.hpp"
#include "gpbounds/numerics.hpp"

namespace gpb::gpr {

// Noisy observations (x_i, y_i). noise_sd and seed are generation metadata
// carried along for provenance; they do not affect fitting.
struct Dataset {
  std::vector<double> inputs;
  Eigen::VectorXd targets;
  double noise_sd = 0.0;
  std::uint64_t seed = 0;
};

void validate(const Dataset& d);  // |inputs| == |targets| >= 1

// Immutable fitted posterior. Queries are read-only and thread-safe.
struct GprPosterior {
  kernels::KernelSpec kernel;
  double lambda = 0.0;                // nominal noise variance (> 0)
  std::vector<double> train_inputs;
  numerics::CholeskyFactor factor;    // of K_N + lambda I
  Eigen::VectorXd alpha;              // (K_N + lambda I)^{-1} y_N
  double targets_norm = 0.0;          // ||y_N||_2
  Eigen::Index n() const { return static_cast<Eigen::Index>(train_inputs.size()); }
};

// Fits the posterior; lambda must be strictly positive (the lambda = 0 /
// pseudo-inverse case is deliberately unsupported). Propagates
// FactorizationFailure from the Cholesky step.
GprPosterior fit(const kernels::KernelSpec& kernel, double lambda,
                 const Dataset& data);

// Same as fit() but takes a precomputed Gram matrix K = gram(kernel, inputs).
// The caller is responsible for K actually being that Gram matrix; the
// experiment harness uses this to reuse a cached full-grid kernel matrix.
GprPosterior fit_with_gram(const kernels::KernelSpec& kernel, double lambda,
                           const Dataset& data, const Eigen::MatrixXd& K);

double mean(const GprPosterior& post, double x);

// Clamped at zero: round-off can push the closed form slightly negative and
// a NaN from sqrt would poison every downstream coverage statistic.
double variance(const GprPosterior& post, double x);

// (K_N + lambda I)^{-1} k_N(x); the bounds need its Euclidean norm.
Eigen::VectorXd cross_weights(const GprPosterior& post, double x);

// Batched query over q points. Kxn holds the cross-kernel values with
// column j equal to k_N(x_j) (size N x q).
struct GridEvaluation {
  Eigen::VectorXd mean;         // mu_N(x_j)
  Eigen::VectorXd variance;     // sigma2_N(x_j) >= 0
  Eigen::VectorXd cross_norm;   // ||k_N(x_j)||_2
  Eigen::VectorXd weight_norm;  // ||(K_N + lambda I)^{-1} k_N(x_j)||_2 (optional)
};

// Computes means/variances (and, if requested, weight norms) for all columns
// of Kxn in one pass; identical to the pointwise queries up to the usual
// floating-point reassociation.
GridEvaluation evaluate_columns(const GprPosterior& post,
                                const Eigen::MatrixXd& Kxn,
                                bool with_weight_norms);

}  // namespace gpb::gpr
