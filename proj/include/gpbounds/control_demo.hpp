#pragma once

// End-to-end demo: learn an unknown nonlinearity r from noisy partial-state
// samples and emit pointwise disturbance sets
//     W(x2) = [mu_N(x2) - beta_N sigma_N(x2),  mu_N(x2) + beta_N sigma_N(x2)]
// on a grid of the operating range, together with a coverage verdict
// (does W contain r everywhere?). The sets are what a robust-MPC pipeline
// would ingest for constraint tightening; the optimization itself is out of
// scope here. An a-priori disturbance box W0 is carried along so consumers
// can clip W(x2) against it.

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "gpbounds/kernels.hpp"
#include "gpbounds/rkhs_sampler.hpp"

namespace gpb::control_demo {

struct DemoParams {
  kernels::KernelSpec kernel{kernels::Family::SquaredExponential, 0.8, 4.0};
  double domain_low = -10.0;
  double domain_high = 10.0;
  int grid_points = 1000;
  int n_train = 100;        // partial states sampled uniformly from the domain
  double noise_sd = 0.01;   // true observation noise (SD)
  // Nominal noise variance. Deliberately two orders above the true noise
  // variance: at lambda ~ noise_sd^2 the tube narrows to the scale of the
  // mean's own estimation error and containment is lost empirically.
  double lambda = 1e-2;
  double B = 2.0;           // RKHS norm of the sampled nonlinearity
  double R = 0.01;          // Gaussian noise of SD 0.01 is 0.01-subgaussian
  double delta = 0.001;
  double w0_low = -7.0;     // a-priori disturbance box, second coordinate
  double w0_high = 7.0;
  // Ground-truth sampler (pre-RKHS draw rescaled to norm B).
  int truth_n_min = 5;
  int truth_n_max = 200;
  double sigma_f2 = 1.0;
};

void validate(const DemoParams& p);

struct DisturbanceSet {
  DemoParams params;
  std::uint64_t seed = 0;
  kernels::Grid grid;          // x2 evaluation points
  Eigen::VectorXd mean;        // mu_N(x2)
  Eigen::VectorXd halfwidth;   // beta_N * sigma_N(x2)
  Eigen::VectorXd lower;       // mean - halfwidth
  Eigen::VectorXd upper;       // mean + halfwidth
  Eigen::VectorXd truth;       // r(x2)
  double beta = 0.0;
  bool contained = false;      // truth inside [lower, upper] at every point
  double frac_inside_w0 = 0.0; // share of points with W(x2) strictly inside W0
};

// Samples the ground truth from (seed)'s dedicated stream, draws the training
// data, fits GPR and evaluates the tube on the grid. Propagates
// FactorizationFailure and DegenerateDraw.
DisturbanceSet run_control_demo(std::uint64_t seed, const DemoParams& params = {});

// Same pipeline with a caller-supplied ground truth (replays, degenerate
// cases such as r identically zero). The data stream still derives from seed.
DisturbanceSet run_control_demo_with_truth(const rkhs::RkhsFunction& truth,
                                           std::uint64_t seed,
                                           const DemoParams& params = {});

// Rows `x2,lower,upper,truth` (17-significant-digit floats). The verdict is
// recomputable from this file alone.
void write_disturbance_csv(const std::string& path, const DisturbanceSet& ds);

// JSON record of everything a downstream consumer needs: kernel, B, R,
// lambda, delta, beta, seed, W0 box, verdict and the soft W0-coverage share.
std::string manifest_json(const DisturbanceSet& ds);

}  // namespace gpb::control_demo
