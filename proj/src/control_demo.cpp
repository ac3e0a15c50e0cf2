#include "gpbounds/control_demo.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "gpbounds/bounds.hpp"
#include "gpbounds/experiments.hpp"
#include "gpbounds/gpr.hpp"
#include "gpbounds/rng.hpp"
#include "json.hpp"

namespace gpb::control_demo {

void validate(const DemoParams& p) {
  kernels::validate(p.kernel);
  if (!(p.domain_low < p.domain_high))
    throw std::invalid_argument("demo: domain_low must be < domain_high");
  if (p.grid_points < 2)
    throw std::invalid_argument("demo: grid needs at least 2 points");
  if (p.n_train < 1) throw std::invalid_argument("demo: n_train must be >= 1");
  if (!(p.noise_sd >= 0.0))
    throw std::invalid_argument("demo: noise_sd must be >= 0");
  if (!(p.lambda > 0.0)) throw std::invalid_argument("demo: lambda must be > 0");
  if (!(p.B > 0.0)) throw std::invalid_argument("demo: B must be > 0");
  if (!(p.R >= 0.0)) throw std::invalid_argument("demo: R must be >= 0");
  if (!(p.delta > 0.0 && p.delta < 1.0))
    throw std::invalid_argument("demo: delta must lie in (0, 1)");
  if (!(p.w0_low < p.w0_high))
    throw std::invalid_argument("demo: w0_low must be < w0_high");
  if (p.truth_n_min < 1 || p.truth_n_min > p.truth_n_max ||
      p.truth_n_max > p.grid_points)
    throw std::invalid_argument("demo: need 1 <= truth_n_min <= truth_n_max <= grid points");
  if (!(p.sigma_f2 > 0.0))
    throw std::invalid_argument("demo: sigma_f2 must be > 0");
}

namespace {

DisturbanceSet run_pipeline(const rkhs::RkhsFunction& truth, std::uint64_t seed,
                            const DemoParams& p, const kernels::Grid& grid) {
  DisturbanceSet ds;
  ds.params = p;
  ds.seed = seed;
  ds.grid = grid;
  ds.truth = rkhs::evaluate_on(truth, grid.points);

  // Training draw: first the continuous-uniform inputs, then the noise.
  // noise_sd = 0 consumes no RNG.
  rng::Engine eng = rng::make_engine(seed, 0, 0);
  gpr::Dataset data;
  data.noise_sd = p.noise_sd;
  data.seed = seed;
  data.inputs.resize(static_cast<std::size_t>(p.n_train));
  std::uniform_real_distribution<double> pick(p.domain_low, p.domain_high);
  for (double& x : data.inputs) x = pick(eng);
  data.targets.resize(p.n_train);
  for (int i = 0; i < p.n_train; ++i)
    data.targets(i) = rkhs::evaluate(truth, data.inputs[static_cast<std::size_t>(i)]);
  if (p.noise_sd > 0.0) {
    std::normal_distribution<double> noise(0.0, p.noise_sd);
    for (int i = 0; i < p.n_train; ++i) data.targets(i) += noise(eng);
  }

  const gpr::GprPosterior post = gpr::fit(p.kernel, p.lambda, data);
  bounds::BoundParams bp;
  bp.B = p.B;
  bp.R = p.R;
  bp.lambda = p.lambda;
  bp.delta = p.delta;
  ds.beta = bounds::beta_nominal(post, bp);

  const Eigen::Index q = static_cast<Eigen::Index>(grid.points.size());
  Eigen::MatrixXd Kxn(post.n(), q);
  for (Eigen::Index c = 0; c < q; ++c)
    for (Eigen::Index i = 0; i < post.n(); ++i)
      Kxn(i, c) = kernels::eval(p.kernel,
                                post.train_inputs[static_cast<std::size_t>(i)],
                                grid.points[static_cast<std::size_t>(c)]);
  const gpr::GridEvaluation ge = gpr::evaluate_columns(post, Kxn, false);

  ds.mean = ge.mean;
  ds.halfwidth = ds.beta * ge.variance.array().sqrt().matrix();
  ds.lower = ds.mean - ds.halfwidth;
  ds.upper = ds.mean + ds.halfwidth;
  ds.contained =
      (ds.truth.array() >= ds.lower.array()).all() &&
      (ds.truth.array() <= ds.upper.array()).all();
  ds.frac_inside_w0 =
      static_cast<double>(((ds.lower.array() > p.w0_low) &&
                           (ds.upper.array() < p.w0_high))
                              .count()) /
      static_cast<double>(q);
  return ds;
}

}  // namespace

DisturbanceSet run_control_demo(std::uint64_t seed, const DemoParams& p) {
  validate(p);
  const kernels::Grid grid =
      kernels::make_equidistant_grid(p.domain_low, p.domain_high, p.grid_points);
  rng::Engine truth_eng = rng::make_engine(seed, 0, rng::kTruthStream);
  const rkhs::RkhsFunction truth =
      rkhs::sample_pre_rkhs(p.kernel, grid, p.B, p.truth_n_min, p.truth_n_max,
                            std::sqrt(p.sigma_f2), truth_eng);
  return run_pipeline(truth, seed, p, grid);
}

DisturbanceSet run_control_demo_with_truth(const rkhs::RkhsFunction& truth,
                                           std::uint64_t seed,
                                           const DemoParams& p) {
  validate(p);
  const kernels::Grid grid =
      kernels::make_equidistant_grid(p.domain_low, p.domain_high, p.grid_points);
  return run_pipeline(truth, seed, p, grid);
}

void write_disturbance_csv(const std::string& path, const DisturbanceSet& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "x2,lower,upper,truth\n";
  for (Eigen::Index i = 0; i < ds.lower.size(); ++i)
    out << experiments::format17(ds.grid.points[static_cast<std::size_t>(i)])
        << ',' << experiments::format17(ds.lower(i)) << ','
        << experiments::format17(ds.upper(i)) << ','
        << experiments::format17(ds.truth(i)) << '\n';
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string manifest_json(const DisturbanceSet& ds) {
  const DemoParams& p = ds.params;
  nlohmann::json j;
  j["kernel"] = {{"family", kernels::family_name(p.kernel.family)},
                 {"lengthscale", p.kernel.lengthscale},
                 {"variance", p.kernel.variance}};
  j["domain"] = {{"low", p.domain_low}, {"high", p.domain_high},
                 {"points", p.grid_points}};
  j["n_train"] = p.n_train;
  j["noise_sd"] = p.noise_sd;
  j["lambda"] = p.lambda;
  j["B"] = p.B;
  j["R"] = p.R;
  j["delta"] = p.delta;
  j["beta"] = ds.beta;
  j["seed"] = ds.seed;
  j["w0"] = {{"low", p.w0_low}, {"high", p.w0_high}};
  j["contained"] = ds.contained;
  j["frac_inside_w0"] = ds.frac_inside_w0;
  return j.dump(2);
}

}  // namespace gpb::control_demo
