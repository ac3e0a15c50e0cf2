#include "gpbounds/bounds.hpp"

#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace gpb::bounds {

void validate(const BoundParams& p) {
  if (!(p.B >= 0.0)) throw std::invalid_argument("BoundParams: B must be >= 0");
  if (!(p.R >= 0.0)) throw std::invalid_argument("BoundParams: R must be >= 0");
  if (!(p.lambda > 0.0))
    throw std::invalid_argument("BoundParams: lambda must be > 0");
  if (!(p.delta > 0.0 && p.delta < 1.0))
    throw std::invalid_argument("BoundParams: delta must be inside (0, 1)");
  if (!(p.eps_tilde >= 0.0))
    throw std::invalid_argument("BoundParams: eps_tilde must be >= 0");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Nominal: return "nominal";
    case Method::Independent: return "independent";
    case Method::RobustNominal: return "robust";
    case Method::RobustIndependent: return "robust-independent";
  }
  throw std::invalid_argument("unknown bound method");
}

Method method_from_name(const std::string& name) {
  if (name == "nominal") return Method::Nominal;
  if (name == "independent") return Method::Independent;
  if (name == "robust") return Method::RobustNominal;
  if (name == "robust-independent") return Method::RobustIndependent;
  throw std::invalid_argument("unknown bound method: \"" + name + "\"");
}

namespace {

// The bound formulas tie 1/lambda and the fitted factor together; a params
// lambda that disagrees with the posterior's would silently mix two models.
void require_matching_lambda(const gpr::GprPosterior& post,
                             const BoundParams& p) {
  if (p.lambda != post.lambda)
    throw std::invalid_argument(
        "BoundParams.lambda must equal the posterior's lambda");
}

void require_nominal(const BoundParams& p, const char* op) {
  if (p.eps_tilde != 0.0)
    throw std::invalid_argument(std::string(op) +
                                ": eps_tilde must be 0 (use a robust variant)");
}

}  // namespace

double beta_shift(double lambda, double eps_tilde, Eigen::Index n) {
  const double shifted = lambda + static_cast<double>(n) * eps_tilde;
  return shifted > 1.0 ? shifted : 1.0;
}

double beta_from_logdet(double B, double R, double delta, double logdet_value) {
  const double arg = logdet_value - 2.0 * std::log(delta);
  // Both summands are non-negative for PSD Gram matrices (shift >= 1) and
  // delta < 1; guard against round-off at the boundary.
  return B + R * std::sqrt(arg > 0.0 ? arg : 0.0);
}

double beta_logdet(const gpr::GprPosterior& post, const BoundParams& p) {
  validate(p);
  require_matching_lambda(post, p);
  const Eigen::MatrixXd K = kernels::gram(post.kernel, post.train_inputs);
  return numerics::logdet(
      numerics::cholesky(K, beta_shift(p.lambda, p.eps_tilde, post.n())));
}

double beta_nominal(const gpr::GprPosterior& post, const BoundParams& p) {
  return beta_from_logdet(p.B, p.R, p.delta, beta_logdet(post, p));
}

TubeEvaluation nominal_halfwidth(const gpr::GprPosterior& post,
                                 const BoundParams& p, double x) {
  validate(p);
  require_nominal(p, "nominal_halfwidth");
  const double beta = beta_nominal(post, p);
  return {x, gpr::mean(post, x), beta * std::sqrt(gpr::variance(post, x)),
          Method::Nominal};
}

double eta_independent(const gpr::GprPosterior& post, const BoundParams& p,
                       double x) {
  validate(p);
  require_matching_lambda(post, p);
  require_nominal(p, "eta_independent");
  return p.R * gpr::cross_weights(post, x).norm() *
         detail::independent_count_term(post.n(), p.delta);
}

TubeEvaluation independent_halfwidth(const gpr::GprPosterior& post,
                                     const BoundParams& p, double x) {
  const double eta = eta_independent(post, p, x);
  return {x, gpr::mean(post, x),
          p.B * std::sqrt(gpr::variance(post, x)) + eta, Method::Independent};
}

double robust_C(const gpr::GprPosterior& post, const BoundParams& p, double x) {
  validate(p);
  require_matching_lambda(post, p);
  const double inv_norm = numerics::inv_spectral_norm(post.factor);
  // Gram matrices are PSD, so ||(K + lambda I)^{-1}|| <= 1/lambda.
  assert(inv_norm <= (1.0 + 1e-6) / p.lambda);
  const double cross_norm =
      kernels::cross_vector(post.kernel, post.train_inputs, x).norm();
  const double sqrt_n_eps =
      std::sqrt(static_cast<double>(post.n())) * p.eps_tilde;
  return detail::robust_C_value(p.lambda, inv_norm, cross_norm, sqrt_n_eps);
}

double robust_S2(const gpr::GprPosterior& post, const BoundParams& p, double x) {
  validate(p);
  require_matching_lambda(post, p);
  const double C = robust_C(post, p, x);
  const double cross_norm =
      kernels::cross_vector(post.kernel, post.train_inputs, x).norm();
  const double weight_norm = gpr::cross_weights(post, x).norm();
  const double sqrt_n_eps =
      std::sqrt(static_cast<double>(post.n())) * p.eps_tilde;
  return detail::robust_S2_value(p.eps_tilde, sqrt_n_eps, weight_norm,
                                 cross_norm, C);
}

TubeEvaluation robust_halfwidth(const gpr::GprPosterior& post,
                                const BoundParams& p, double x) {
  validate(p);
  require_matching_lambda(post, p);
  const double beta_tilde = beta_nominal(post, p);
  const double C = robust_C(post, p, x);
  const double S2 = robust_S2(post, p, x);
  const double hw = detail::robust_halfwidth_value(
      beta_tilde, gpr::variance(post, x), S2, C, post.targets_norm);
  return {x, gpr::mean(post, x), hw, Method::RobustNominal};
}

TubeEvaluation robust_independent_halfwidth(const gpr::GprPosterior& post,
                                            const BoundParams& p, double x) {
  validate(p);
  require_matching_lambda(post, p);
  const double C = robust_C(post, p, x);
  const double S2 = robust_S2(post, p, x);
  const double weight_norm = gpr::cross_weights(post, x).norm();
  const double hw = detail::robust_independent_halfwidth_value(
      p.B, p.R, gpr::variance(post, x), S2, C, post.targets_norm, weight_norm,
      detail::independent_count_term(post.n(), p.delta));
  return {x, gpr::mean(post, x), hw, Method::RobustIndependent};
}

void write_tube_csv(const std::string& path,
                    const std::vector<TubeEvaluation>& tube) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "x,mean,halfwidth,method\n";
  char buf[128];
  for (const TubeEvaluation& t : tube) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,", t.query, t.mean,
                  t.halfwidth);
    out << buf << method_name(t.method) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace detail {

double independent_count_term(Eigen::Index n, double delta) {
  const double N = static_cast<double>(n);
  const double log_inv = std::log(1.0 / delta);
  return std::sqrt(N + 2.0 * std::sqrt(N) * std::sqrt(log_inv) + 2.0 * log_inv);
}

double robust_C_value(double lambda, double inv_norm, double cross_norm,
                      double sqrt_n_eps) {
  return (1.0 / lambda + inv_norm) * (cross_norm + sqrt_n_eps) +
         inv_norm * sqrt_n_eps;
}

double robust_S2_value(double eps_tilde, double sqrt_n_eps, double weight_norm,
                       double cross_norm, double C) {
  return eps_tilde + sqrt_n_eps * weight_norm + (sqrt_n_eps + cross_norm) * C;
}

double robust_halfwidth_value(double beta_tilde, double sigma2, double S2,
                              double C, double targets_norm) {
  return beta_tilde * std::sqrt(sigma2 + S2) + C * targets_norm;
}

double robust_independent_halfwidth_value(double B, double R, double sigma2,
                                          double S2, double C,
                                          double targets_norm,
                                          double weight_norm,
                                          double count_term) {
  return B * std::sqrt(sigma2 + S2) + C * targets_norm +
         R * (weight_norm + C) * count_term;
}

}  // namespace detail

}  // namespace gpb::bounds
