#include "gpbounds/rkhs_sampler.hpp"

#include <cmath>
#include <random>

#include "json.hpp"

namespace gpb::rkhs {

namespace {

constexpr int kMaxResampleAttempts = 100;
constexpr double kDegenerateNorm2 = 1e-14;

// n distinct indices from {0, ..., pool-1}, in draw order.
std::vector<int> draw_distinct_indices(int n, int pool, rng::Engine& eng) {
  std::uniform_int_distribution<int> pick(0, pool - 1);
  std::vector<bool> used(static_cast<std::size_t>(pool), false);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    const int i = pick(eng);
    if (used[static_cast<std::size_t>(i)]) continue;
    used[static_cast<std::size_t>(i)] = true;
    out.push_back(i);
  }
  return out;
}

}  // namespace

RkhsFunction sample_pre_rkhs(const kernels::KernelSpec& kernel,
                             const kernels::Grid& grid, double B, int n_min,
                             int n_max, double sigma_f, rng::Engine& eng) {
  kernels::validate(kernel);
  kernels::validate(grid);
  if (!(B > 0.0)) throw std::invalid_argument("sample_pre_rkhs: B must be > 0");
  if (n_min < 1 || n_min > n_max ||
      n_max > static_cast<int>(grid.points.size()))
    throw std::invalid_argument(
        "sample_pre_rkhs: need 1 <= n_min <= n_max <= |grid|");
  if (!(sigma_f >= 0.0))
    throw std::invalid_argument("sample_pre_rkhs: sigma_f must be >= 0");

  std::uniform_int_distribution<int> count(n_min, n_max);
  const int n = count(eng);

  RkhsFunction f;
  f.kind = RkhsFunction::Kind::PreRkhs;
  f.kernel = kernel;
  f.centers.reserve(static_cast<std::size_t>(n));
  for (int i : draw_distinct_indices(n, static_cast<int>(grid.points.size()), eng))
    f.centers.push_back(grid.points[static_cast<std::size_t>(i)]);

  const Eigen::MatrixXd K = kernels::gram(kernel, f.centers);
  std::normal_distribution<double> coeff(0.0, sigma_f > 0.0 ? sigma_f : 1.0);
  Eigen::VectorXd alpha(n);
  for (int attempt = 0; attempt < kMaxResampleAttempts; ++attempt) {
    for (Eigen::Index i = 0; i < alpha.size(); ++i)
      alpha(i) = sigma_f > 0.0 ? coeff(eng) : 0.0;
    const double norm2 = alpha.dot(K * alpha);
    if (norm2 > kDegenerateNorm2) {
      f.coefficients = (B / std::sqrt(norm2)) * alpha;
      f.declared_norm = B;
      return f;
    }
  }
  throw DegenerateDraw(
      "sample_pre_rkhs: coefficient draw degenerate 100 times in a row");
}

RkhsFunction sample_onb(double lengthscale, const kernels::Grid& grid,
                        double B, int max_basis, int n_min, int n_max,
                        rng::Engine& eng) {
  kernels::validate(grid);
  if (!(lengthscale > 0.0))
    throw std::invalid_argument("sample_onb: lengthscale must be > 0");
  if (!(B > 0.0)) throw std::invalid_argument("sample_onb: B must be > 0");
  if (n_min < 1 || n_min > n_max || n_max > max_basis)
    throw std::invalid_argument(
        "sample_onb: need 1 <= n_min <= n_max <= max_basis");

  std::uniform_int_distribution<int> count(n_min, n_max);
  const int n = count(eng);

  RkhsFunction f;
  f.kind = RkhsFunction::Kind::Onb;
  f.kernel = kernels::KernelSpec{kernels::Family::SquaredExponential,
                                 lengthscale, 1.0};
  f.basis_indices = draw_distinct_indices(n, max_basis, eng);

  std::normal_distribution<double> coeff(0.0, 1.0);
  Eigen::VectorXd a(n);
  for (int attempt = 0; attempt < kMaxResampleAttempts; ++attempt) {
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = coeff(eng);
    const double norm2 = a.squaredNorm();
    if (norm2 > kDegenerateNorm2) {
      f.coefficients = (B / std::sqrt(norm2)) * a;
      f.declared_norm = B;
      return f;
    }
  }
  throw DegenerateDraw(
      "sample_onb: coefficient draw degenerate 100 times in a row");
}

double onb_basis_value(int n, double sigma2, double x) {
  // sqrt((2 sigma2)^n / n!) via log-gamma; direct factorials overflow well
  // before n = 50.
  const double log_weight =
      0.5 * (n * std::log(2.0 * sigma2) - std::lgamma(n + 1.0));
  return std::exp(log_weight) * std::pow(x, n) * std::exp(-sigma2 * x * x);
}

double evaluate(const RkhsFunction& f, double x) {
  double acc = 0.0;
  if (f.kind == RkhsFunction::Kind::PreRkhs) {
    for (Eigen::Index i = 0; i < f.coefficients.size(); ++i)
      acc += f.coefficients(i) *
             kernels::eval(f.kernel, f.centers[static_cast<std::size_t>(i)], x);
  } else {
    const double sigma2 =
        1.0 / (2.0 * f.kernel.lengthscale * f.kernel.lengthscale);
    for (Eigen::Index i = 0; i < f.coefficients.size(); ++i)
      acc += f.coefficients(i) *
             onb_basis_value(f.basis_indices[static_cast<std::size_t>(i)],
                             sigma2, x);
  }
  return acc;
}

Eigen::VectorXd evaluate_on(const RkhsFunction& f,
                            const std::vector<double>& xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v(i) = evaluate(f, xs[static_cast<std::size_t>(i)]);
  return v;
}

std::string to_json_string(const RkhsFunction& f) {
  nlohmann::json j;
  j["kind"] = f.kind == RkhsFunction::Kind::PreRkhs ? "pre_rkhs" : "onb";
  j["kernel"] = {{"family", kernels::family_name(f.kernel.family)},
                 {"lengthscale", f.kernel.lengthscale},
                 {"variance", f.kernel.variance}};
  if (f.kind == RkhsFunction::Kind::PreRkhs)
    j["centers"] = f.centers;
  else
    j["basis_indices"] = f.basis_indices;
  j["coefficients"] = std::vector<double>(
      f.coefficients.data(), f.coefficients.data() + f.coefficients.size());
  j["declared_norm"] = f.declared_norm;
  return j.dump(2);
}

RkhsFunction from_json_string(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  RkhsFunction f;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "pre_rkhs")
    f.kind = RkhsFunction::Kind::PreRkhs;
  else if (kind == "onb")
    f.kind = RkhsFunction::Kind::Onb;
  else
    throw std::invalid_argument("RkhsFunction: unknown kind \"" + kind + "\"");
  const auto& jk = j.at("kernel");
  f.kernel.family =
      kernels::family_from_name(jk.at("family").get<std::string>());
  f.kernel.lengthscale = jk.at("lengthscale").get<double>();
  f.kernel.variance = jk.at("variance").get<double>();
  if (f.kind == RkhsFunction::Kind::PreRkhs)
    f.centers = j.at("centers").get<std::vector<double>>();
  else
    f.basis_indices = j.at("basis_indices").get<std::vector<int>>();
  const auto coeffs = j.at("coefficients").get<std::vector<double>>();
  f.coefficients = Eigen::Map<const Eigen::VectorXd>(
      coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
  f.declared_norm = j.at("declared_norm").get<double>();
  if (f.kind == RkhsFunction::Kind::PreRkhs &&
      f.centers.size() != static_cast<std::size_t>(f.coefficients.size()))
    throw std::invalid_argument("RkhsFunction: centers/coefficients mismatch");
  if (f.kind == RkhsFunction::Kind::Onb &&
      f.basis_indices.size() != static_cast<std::size_t>(f.coefficients.size()))
    throw std::invalid_argument("RkhsFunction: indices/coefficients mismatch");
  return f;
}

}  // namespace gpb::rkhs
