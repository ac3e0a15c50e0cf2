#pragma once

// Frequentist uncertainty tubes around the GPR posterior mean. Four tube
// constructions are provided; each guarantees, under its own assumptions,
// that a fixed RKHS ground truth f with ||f||_k <= B is contained in
// [mu_N(x) - hw(x), mu_N(x) + hw(x)] with probability >= 1 - delta over the
// noise process.
//
//   Nominal            hw = beta_N * sigma_N(x)
//                      beta_N = B + R sqrt(log det(K_N + lb I) - 2 log delta),
//                      lb = max{1, lambda} (R-subgaussian noise).
//   Independent        hw = B sigma_N(x) + eta_N(x), with
//                      eta_N = R ||(K_N+lambda I)^{-1} k_N(x)||
//                              * sqrt(N + 2 sqrt(N log(1/delta)) + 2 log(1/delta))
//                      (independent R-subgaussian noise coordinates).
//   RobustNominal      hw = bt_N sqrt(sigma2_N(x) + S2_N(x)) + C_N(x) ||y_N||,
//                      valid when the data kernel k~ deviates from the model
//                      kernel by at most eps_tilde in sup norm; bt_N is the
//                      nominal beta with shift max{1, lambda + N eps_tilde}.
//   RobustIndependent  hw = B sqrt(sigma2_N + S2_N) + C_N ||y_N|| + eta~_N,
//                      eta~_N = R (||(K+lambda I)^{-1}k_N(x)|| + C_N(x))
//                               * sqrt(N + 2 sqrt(N log(1/delta)) + 2 log(1/delta)).
//
// with  C_N(x) = (1/lambda + ||(K_N+lambda I)^{-1}||) (||k_N(x)|| + sqrt(N) eps~)
//              + ||(K_N+lambda I)^{-1}|| sqrt(N) eps~
//       S2_N(x) = eps~ + sqrt(N) eps~ ||(K_N+lambda I)^{-1} k_N(x)||
//               + (sqrt(N) eps~ + ||k_N(x)||) C_N(x).
//
// Vector norms are Euclidean, matrix norms spectral. Note the robust tube
// does NOT collapse to the nominal one at eps~ = 0: the ||k_N(x)|| C_N(x)
// term survives, by design of the construction.

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gpbounds/gpr.hpp"

namespace gpb::bounds {

struct BoundParams {
  double B = 0.0;          // RKHS norm bound, >= 0
  double R = 0.0;          // subgaussian noise scale, >= 0
  double lambda = 1.0;     // nominal noise variance, > 0 (must match the fit)
  double delta = 0.1;      // confidence level, in (0, 1)
  double eps_tilde = 0.0;  // kernel sup-distance, >= 0 (0 = nominal setting)
};

void validate(const BoundParams& p);

enum class Method { Nominal, Independent, RobustNominal, RobustIndependent };

std::string method_name(Method m);
Method method_from_name(const std::string& name);  // throws on unknown name

struct TubeEvaluation {
  double query = 0.0;
  double mean = 0.0;
  double halfwidth = 0.0;  // >= 0
  Method method = Method::Nominal;
};

// --- beta machinery ---------------------------------------------------------

// Shift entering the log-determinant: max{1, lambda + n * eps_tilde}.
double beta_shift(double lambda, double eps_tilde, Eigen::Index n);

// beta = B + R sqrt(logdet_value - 2 log delta).
double beta_from_logdet(double B, double R, double delta, double logdet_value);

// log det(K_N + beta_shift * I) over the posterior's training set.
double beta_logdet(const gpr::GprPosterior& post, const BoundParams& p);

// Full beta for the posterior. With eps_tilde = 0 this is the nominal beta;
// with eps_tilde > 0 it is the robust beta~ (same formula, shifted
// determinant). Monotone non-decreasing in N and non-increasing in delta.
// Note: recomputes the training Gram; when evaluating a dense query set,
// hoist beta_logdet() once and use beta_from_logdet() per delta.
double beta_nominal(const gpr::GprPosterior& post, const BoundParams& p);

// --- tube evaluations --------------------------------------------------------

// Requires p.eps_tilde == 0 (use the robust variants otherwise).
TubeEvaluation nominal_halfwidth(const gpr::GprPosterior& post,
                                 const BoundParams& p, double x);

// eta_N(x) of the independent-noise tube; requires p.eps_tilde == 0.
double eta_independent(const gpr::GprPosterior& post, const BoundParams& p,
                       double x);
TubeEvaluation independent_halfwidth(const gpr::GprPosterior& post,
                                     const BoundParams& p, double x);

// C_N(x) and S2_N(x) of the misspecification-robust tube. The last C_N term
// uses (K_N + lambda I)^{-1}, the invertible reading consistent with the
// construction's derivation.
double robust_C(const gpr::GprPosterior& post, const BoundParams& p, double x);
double robust_S2(const gpr::GprPosterior& post, const BoundParams& p, double x);

TubeEvaluation robust_halfwidth(const gpr::GprPosterior& post,
                                const BoundParams& p, double x);
TubeEvaluation robust_independent_halfwidth(const gpr::GprPosterior& post,
                                            const BoundParams& p, double x);

// Writes rows `x,mean,halfwidth,method` (17-significant-digit floats).
void write_tube_csv(const std::string& path,
                    const std::vector<TubeEvaluation>& tube);

// --- scalar cores ------------------------------------------------------------
// Pure scalar pieces shared between the pointwise API above and the batched
// experiment harness, so both paths compute identical values.
namespace detail {

// sqrt(N + 2 sqrt(N) sqrt(log(1/delta)) + 2 log(1/delta))
double independent_count_term(Eigen::Index n, double delta);

double robust_C_value(double lambda, double inv_norm, double cross_norm,
                      double sqrt_n_eps);

double robust_S2_value(double eps_tilde, double sqrt_n_eps, double weight_norm,
                       double cross_norm, double C);

double robust_halfwidth_value(double beta_tilde, double sigma2, double S2,
                              double C, double targets_norm);

double robust_independent_halfwidth_value(double B, double R, double sigma2,
                                          double S2, double C,
                                          double targets_norm,
                                          double weight_norm,
                                          double count_term);

}  // namespace detail

}  // namespace gpb::bounds
