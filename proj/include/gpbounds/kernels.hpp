#pragma once

// Stationary covariance kernels on 1-D inputs: squared-exponential and
// Matern-3/2, plus Gram/cross-kernel evaluation and the sup-distance
// max |k - k_tilde| between two kernels over a finite grid.

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace gpb::kernels {

enum class Family { SquaredExponential, Matern32 };

// A kernel is identified by its family, length-scale and output variance
// (the value of k(x, x)). Both families are bounded: |k(x, x')| <= variance.
struct KernelSpec {
  Family family = Family::SquaredExponential;
  double lengthscale = 1.0;  // > 0, input units
  double variance = 1.0;     // > 0, output^2 units
};

// Throws std::invalid_argument if lengthscale or variance is not positive.
void validate(const KernelSpec& k);

// "se" or "matern32".
std::string family_name(Family f);
Family family_from_name(const std::string& name);  // throws on unknown name

bool operator==(const KernelSpec& a, const KernelSpec& b);

// Ordered evaluation points within closed bounds [low, high].
struct Grid {
  std::vector<double> points;  // strictly increasing
  double low = 0.0;
  double high = 0.0;
};

// n equidistant points spanning [low, high] (n >= 2; endpoints included).
Grid make_equidistant_grid(double low, double high, int n);

// Throws std::invalid_argument when points are not strictly increasing or
// fall outside the bounds.
void validate(const Grid& g);

// k(x, x'); symmetric, equals `variance` on the diagonal.
double eval(const KernelSpec& k, double x, double xp);

// N x N Gram matrix (k(x_j, x_i)); symmetric positive semi-definite.
Eigen::MatrixXd gram(const KernelSpec& k, const std::vector<double>& X);

// Length-N cross-kernel vector (k(x_i, x))_i.
Eigen::VectorXd cross_vector(const KernelSpec& k, const std::vector<double>& X,
                             double x);

// max_{i,j} |k(g_i, g_j) - k_tilde(g_i, g_j)| over all grid pairs. This is a
// grid maximum, not a true supremum; it is valid wherever coverage is
// asserted because coverage checks reuse the same grid.
double sup_distance(const KernelSpec& k, const KernelSpec& k_tilde,
                    const Grid& grid);

}  // namespace gpb::kernels
