#pragma once

// Monte-Carlo coverage harness. One experiment = (truth sampler, truth
// kernel, model kernel, tube method) x n_functions ground truths x n_reps
// learning instances. Each instance draws training inputs uniformly from the
// evaluation grid (with replacement), adds Gaussian noise, fits GPR with the
// model kernel, evaluates the configured tube at every grid point and flags
// a violation if the tube misses the truth anywhere on the grid.
//
// Determinism: every instance runs on its own RNG substream derived from
// (master_seed, function_id, rep_id), and aggregation always scans records
// in (function_id, rep_id) order, so reports and CSV outputs are
// byte-identical regardless of the number of worker threads.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gpbounds/bounds.hpp"
#include "gpbounds/gpr.hpp"
#include "gpbounds/kernels.hpp"
#include "gpbounds/rkhs_sampler.hpp"

namespace gpb::experiments {

enum class Sampler { PreRkhs, Onb };

std::string sampler_name(Sampler s);
Sampler sampler_from_name(const std::string& name);

struct GridSpec {
  double low = -1.0;
  double high = 1.0;
  int points = 1000;
};

struct SamplerParams {
  // Pre-RKHS draws: number of kernel-section centers and coefficient variance.
  int n_min = 5;
  int n_max = 200;
  double sigma_f2 = 1.0;
  // ONB draws: basis pool size and number of active basis functions.
  int onb_max_basis = 50;
  int onb_n_min = 5;
  int onb_n_max = 50;
};

struct SweepSpec {
  int n_scalings = 20;  // equidistant tube scalings from `low` up to beta_N
  double low = 2.0;
};

struct ExperimentConfig {
  std::string tag;
  kernels::KernelSpec truth_kernel;  // kernel the ground truths live in
  kernels::KernelSpec model_kernel;  // kernel handed to the GPR fit
  Sampler sampler = Sampler::PreRkhs;
  GridSpec grid;
  int n_functions = 50;
  int n_reps = 10000;
  int n_train = 50;
  double noise_sd = 0.5;   // true observation noise (SD)
  double lambda = 0.5;     // nominal noise variance used by GPR and bounds
  double B = 2.0;          // RKHS norm of sampled truths and bound parameter
  double R = 0.5;          // subgaussian constant fed to the bounds
  std::vector<double> deltas{0.1, 0.01, 0.001, 0.0001};
  bounds::Method bound_method = bounds::Method::Nominal;
  std::optional<SweepSpec> sweep;
  std::uint64_t master_seed = 20260825ull;
  SamplerParams sampler_params;
};

void validate(const ExperimentConfig& cfg);

// Built-in configurations; throws std::invalid_argument on unknown tags.
ExperimentConfig preset(const std::string& tag);
std::vector<std::string> preset_tags();

// JSON round-trip for config files.
std::string config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const std::string& text);

// --- per-instance records ----------------------------------------------------

struct InstanceRecord {
  int function_id = 0;
  int rep_id = 0;
  bool factorization_failed = false;
  std::vector<unsigned char> violated;  // per delta: tube missed truth somewhere
  std::vector<double> beta;             // per delta (beta-based methods only)
  std::vector<double> width_mean;       // per delta: halfwidth mean over grid
  std::vector<double> width_sd;         // per delta: halfwidth SD over grid
};

// Deterministic ground-truth draw for one function id (stream independent of
// all per-instance streams).
rkhs::RkhsFunction sample_truth(const ExperimentConfig& cfg, int function_id);

// Runs one learning instance against the given truth. Propagates
// FactorizationFailure; the experiment driver catches and counts it.
InstanceRecord run_instance(const rkhs::RkhsFunction& truth,
                            const ExperimentConfig& cfg, int function_id,
                            int rep_id);

// --- coverage report -----------------------------------------------------------

struct FunctionDeltaCell {
  int function_id = 0;
  double delta = 0.0;
  long failures = 0;
  long reps = 0;  // successful instances entering the statistics
  double beta_mean = 0.0, beta_sd = 0.0;
  double width_mean = 0.0, width_sd = 0.0;  // stats of per-instance width_mean
};

struct CoverageReport {
  ExperimentConfig config;
  double eps_tilde = 0.0;  // grid sup-distance used by robust methods
  std::vector<FunctionDeltaCell> cells;  // sorted by (function_id, delta index)
  struct Aggregate {
    double delta = 0.0;
    long failures = 0;
    long reps = 0;
    double beta_mean = 0.0, beta_sd = 0.0;
    double width_mean = 0.0, width_sd = 0.0;
  };
  std::vector<Aggregate> aggregates;     // one per delta, over all instances
  std::vector<InstanceRecord> instances; // (function_id, rep_id) order
  long factorization_failures = 0;
};

// jobs <= 0 means "one worker per hardware thread".
CoverageReport run_experiment(const ExperimentConfig& cfg, int jobs = 1);

// --- conservatism sweep ---------------------------------------------------------

// Replaces beta by n_scalings equidistant values between sweep.low and the
// per-instance beta (single-delta nominal method only). The top scaling is
// exactly beta, so its failure statistics coincide with run_experiment's.
struct SweepReport {
  ExperimentConfig config;
  std::vector<double> scaling_mean;      // per scaling index, mean over instances
  std::vector<std::vector<long>> failures;  // [scaling][function]
  long reps = 0;                         // per function
  long factorization_failures = 0;
  double failure_rate(int scaling, int function_id) const {
    return static_cast<double>(failures[static_cast<std::size_t>(scaling)]
                                        [static_cast<std::size_t>(function_id)]) /
           static_cast<double>(reps);
  }
};

SweepReport run_sweep(const ExperimentConfig& cfg, int jobs = 1);

// --- emission -------------------------------------------------------------------

// 17-significant-digit float formatting used in every CSV.
std::string format17(double v);

// Per-instance and per-function tables. betas.csv exists only for beta-based
// tube methods (nominal / robust).
//   betas.csv    function_id,rep_id,delta,beta
//   coverage.csv function_id,delta,failures,reps
//   widths.csv   function_id,rep_id,delta,width_mean,width_sd
//   sweep.csv    scaling,function_id,failure_rate
void write_betas_csv(const std::string& path, const CoverageReport& report);
void write_coverage_csv(const std::string& path, const CoverageReport& report);
void write_widths_csv(const std::string& path, const CoverageReport& report);
void write_sweep_csv(const std::string& path, const SweepReport& report);

// One summary row per (report, delta): experiment-level aggregates in the
// layout tag,delta,beta_mean,beta_sd,failures,reps,failure_rate,width_mean,
// width_sd. Throws std::invalid_argument on an empty report list.
void write_summary_csv(const std::string& path,
                       const std::vector<CoverageReport>& reports);

// Writes every applicable table into `dir` and returns the file paths.
std::vector<std::string> write_report_outputs(const std::string& dir,
                                              const CoverageReport& report);

}  // namespace gpb::experiments
