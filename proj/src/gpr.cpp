#include "gpbounds/gpr.hpp"

#include <cmath>
#include <stdexcept>

namespace gpb::gpr {

void validate(const Dataset& d) {
  if (d.inputs.empty())
    throw std::invalid_argument("dataset must contain at least one point");
  if (static_cast<Eigen::Index>(d.inputs.size()) != d.targets.size())
    throw std::invalid_argument("dataset inputs/targets length mismatch");
}

GprPosterior fit(const kernels::KernelSpec& kernel, double lambda,
                 const Dataset& data) {
  return fit_with_gram(kernel, lambda, data, kernels::gram(kernel, data.inputs));
}

GprPosterior fit_with_gram(const kernels::KernelSpec& kernel, double lambda,
                           const Dataset& data, const Eigen::MatrixXd& K) {
  kernels::validate(kernel);
  validate(data);
  if (!(lambda > 0.0))
    throw std::invalid_argument("fit: lambda must be strictly positive");
  if (K.rows() != static_cast<Eigen::Index>(data.inputs.size()) ||
      K.cols() != K.rows())
    throw std::invalid_argument("fit: Gram matrix dimension mismatch");

  GprPosterior post;
  post.kernel = kernel;
  post.lambda = lambda;
  post.train_inputs = data.inputs;
  post.factor = numerics::cholesky(K, lambda);
  post.alpha = numerics::solve(post.factor, data.targets);
  post.targets_norm = data.targets.norm();
  return post;
}

double mean(const GprPosterior& post, double x) {
  return kernels::cross_vector(post.kernel, post.train_inputs, x).dot(post.alpha);
}

double variance(const GprPosterior& post, double x) {
  Eigen::VectorXd v = kernels::cross_vector(post.kernel, post.train_inputs, x);
  post.factor.L.triangularView<Eigen::Lower>().solveInPlace(v);
  // Both kernel families are stationary, so k(x, x) is the output variance.
  const double s2 = post.kernel.variance - v.squaredNorm();
  return s2 > 0.0 ? s2 : 0.0;
}

Eigen::VectorXd cross_weights(const GprPosterior& post, double x) {
  return numerics::solve(
      post.factor, kernels::cross_vector(post.kernel, post.train_inputs, x));
}

GridEvaluation evaluate_columns(const GprPosterior& post,
                                const Eigen::MatrixXd& Kxn,
                                bool with_weight_norms) {
  if (Kxn.rows() != post.n())
    throw std::invalid_argument("evaluate_columns: cross-kernel row mismatch");

  GridEvaluation out;
  out.cross_norm = Kxn.colwise().norm().transpose();
  out.mean = Kxn.transpose() * post.alpha;

  // V = L^{-1} Kxn gives sigma2 = k(x,x) - ||V.col||^2; a second half-solve
  // turns V into the full weight matrix (K + lambda I)^{-1} Kxn.
  Eigen::MatrixXd V = Kxn;
  numerics::solve_in_place_lower(post.factor, V);
  out.variance = (post.kernel.variance -
                  V.colwise().squaredNorm().transpose().array())
                     .max(0.0);
  if (with_weight_norms) {
    numerics::solve_in_place_upper(post.factor, V);
    out.weight_norm = V.colwise().norm().transpose();
  }
  return out;
}

}  // namespace gpb::gpr
