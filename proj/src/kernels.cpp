#include "gpbounds/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace gpb::kernels {

void validate(const KernelSpec& k) {
  if (!(k.lengthscale > 0.0))
    throw std::invalid_argument("kernel lengthscale must be positive");
  if (!(k.variance > 0.0))
    throw std::invalid_argument("kernel variance must be positive");
}

std::string family_name(Family f) {
  switch (f) {
    case Family::SquaredExponential: return "se";
    case Family::Matern32: return "matern32";
  }
  throw std::invalid_argument("unknown kernel family");
}

Family family_from_name(const std::string& name) {
  if (name == "se") return Family::SquaredExponential;
  if (name == "matern32") return Family::Matern32;
  throw std::invalid_argument("unknown kernel family: \"" + name +
                              "\" (expected \"se\" or \"matern32\")");
}

bool operator==(const KernelSpec& a, const KernelSpec& b) {
  return a.family == b.family && a.lengthscale == b.lengthscale &&
         a.variance == b.variance;
}

Grid make_equidistant_grid(double low, double high, int n) {
  if (n < 2) throw std::invalid_argument("grid needs at least 2 points");
  if (!(low < high)) throw std::invalid_argument("grid bounds must satisfy low < high");
  Grid g;
  g.low = low;
  g.high = high;
  g.points.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    g.points[static_cast<std::size_t>(i)] =
        low + (high - low) * static_cast<double>(i) / static_cast<double>(n - 1);
  g.points.back() = high;  // guard the last point against round-off drift
  return g;
}

void validate(const Grid& g) {
  if (g.points.empty()) throw std::invalid_argument("grid must be non-empty");
  for (std::size_t i = 0; i < g.points.size(); ++i) {
    if (i > 0 && !(g.points[i - 1] < g.points[i]))
      throw std::invalid_argument("grid points must be strictly increasing");
    if (g.points[i] < g.low || g.points[i] > g.high)
      throw std::invalid_argument("grid point outside declared bounds");
  }
}

double eval(const KernelSpec& k, double x, double xp) {
  const double d = x - xp;
  switch (k.family) {
    case Family::SquaredExponential:
      return k.variance * std::exp(-d * d / (2.0 * k.lengthscale * k.lengthscale));
    case Family::Matern32: {
      const double s = std::sqrt(3.0) * std::abs(d) / k.lengthscale;
      return k.variance * (1.0 + s) * std::exp(-s);
    }
  }
  throw std::invalid_argument("unknown kernel family");
}

Eigen::MatrixXd gram(const KernelSpec& k, const std::vector<double>& X) {
  if (X.empty()) throw std::invalid_argument("gram: input list must be non-empty");
  const Eigen::Index n = static_cast<Eigen::Index>(X.size());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    K(j, j) = k.variance;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = eval(k, X[static_cast<std::size_t>(i)],
                            X[static_cast<std::size_t>(j)]);
      K(i, j) = v;
      K(j, i) = v;  // exact symmetry by construction
    }
  }
  return K;
}

Eigen::VectorXd cross_vector(const KernelSpec& k, const std::vector<double>& X,
                             double x) {
  if (X.empty())
    throw std::invalid_argument("cross_vector: input list must be non-empty");
  Eigen::VectorXd v(static_cast<Eigen::Index>(X.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v(i) = eval(k, X[static_cast<std::size_t>(i)], x);
  return v;
}

double sup_distance(const KernelSpec& k, const KernelSpec& k_tilde,
                    const Grid& grid) {
  if (grid.points.empty())
    throw std::invalid_argument("sup_distance: grid must be non-empty");
  double best = 0.0;
  // Both kernels are symmetric, so scanning ordered pairs (i <= j) suffices.
  for (std::size_t j = 0; j < grid.points.size(); ++j) {
    for (std::size_t i = j; i < grid.points.size(); ++i) {
      const double d = std::abs(eval(k, grid.points[i], grid.points[j]) -
                                eval(k_tilde, grid.points[i], grid.points[j]));
      if (d > best) best = d;
    }
  }
  return best;
}

}  // namespace gpb::kernels
