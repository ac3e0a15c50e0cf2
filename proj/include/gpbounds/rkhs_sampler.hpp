#pragma once

// Ground-truth generators producing functions of prescribed RKHS norm B.
//
// Pre-RKHS construction: f = sum_i alpha_i k(c_i, .) over pairwise-distinct
// grid centers c_i, with ||f||_k = sqrt(alpha^T K alpha) rescaled to B.
//
// ONB construction (squared-exponential kernels with unit variance only):
// f = sum a_n e_n over a random subset of the first `max_basis` members of
// the explicit orthonormal basis
//     e_n(x) = sqrt((2 sigma2)^n / n!) * x^n * exp(-sigma2 x^2),
// sigma2 = 1 / (2 lengthscale^2), for which sum_n e_n(x) e_n(x') equals the
// SE kernel. Orthonormality makes ||f||_k = ||a||_2, rescaled to B.
//
// Both samplers draw from an explicit RNG engine; giving each draw its own
// engine makes sampling safe in parallel and reproducible.

#include <Eigen/Dense>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpbounds/kernels.hpp"
#include "gpbounds/rng.hpp"

namespace gpb::rkhs {

// Raised when a draw collapses numerically (zero norm before rescaling)
// 100 times in a row.
struct DegenerateDraw : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RkhsFunction {
  enum class Kind { PreRkhs, Onb };
  Kind kind = Kind::PreRkhs;
  kernels::KernelSpec kernel;      // Onb: the SE kernel the basis spans
  std::vector<double> centers;     // PreRkhs only
  std::vector<int> basis_indices;  // Onb only
  Eigen::VectorXd coefficients;
  double declared_norm = 0.0;      // = B by construction
};

// Draws the number of centers uniformly from [n_min, n_max], picks that many
// pairwise-distinct grid points, samples coefficients N(0, sigma_f^2) and
// rescales to RKHS norm B. sigma_f is the standard deviation.
RkhsFunction sample_pre_rkhs(const kernels::KernelSpec& kernel,
                             const kernels::Grid& grid, double B, int n_min,
                             int n_max, double sigma_f, rng::Engine& eng);

// Draws the number of basis functions uniformly from [n_min, n_max], picks
// that many distinct indices from {0, ..., max_basis-1}, samples i.i.d.
// standard-normal coefficients and rescales their l2 norm to B.
RkhsFunction sample_onb(double lengthscale, const kernels::Grid& grid,
                        double B, int max_basis, int n_min, int n_max,
                        rng::Engine& eng);

double evaluate(const RkhsFunction& f, double x);
Eigen::VectorXd evaluate_on(const RkhsFunction& f,
                            const std::vector<double>& xs);

// n-th ONB member at x; basis weights are computed via log-gamma so indices
// near 50 do not overflow. Exposed for the reproducing-expansion oracle.
double onb_basis_value(int n, double sigma2, double x);

// Structured text (JSON) round-trip so ground truths can be persisted and
// replayed: {kind, kernel, centers|basis_indices, coefficients, declared_norm}.
std::string to_json_string(const RkhsFunction& f);
RkhsFunction from_json_string(const std::string& text);

}  // namespace gpb::rkhs
