// gpbounds: command-line front end for the GPR uncertainty-tube toolkit.
//
// Subcommands
//   experiment      Monte-Carlo coverage run (preset tag or --config JSON)
//   sweep           tube-scaling conservatism sweep (single-delta presets)
//   sample-function draw one ground truth of prescribed RKHS norm
//   fit-and-bound   fit GPR to a dataset CSV and emit a tube over a grid
//   control-demo    disturbance-set generation demo
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure.
// All CSV outputs are byte-deterministic given (command, config, seed);
// manifest.json is not (it records wall-clock time).

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gpbounds/bounds.hpp"
#include "gpbounds/control_demo.hpp"
#include "gpbounds/experiments.hpp"
#include "gpbounds/gpr.hpp"
#include "gpbounds/kernels.hpp"
#include "gpbounds/numerics.hpp"
#include "gpbounds/rkhs_sampler.hpp"
#include "gpbounds/rng.hpp"

namespace {

constexpr const char* kToolName = "gpbounds";
constexpr const char* kToolVersion = "0.1.0";

namespace fs = std::filesystem;
using gpb::experiments::format17;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

// Shared manifest layout. `config` is a JSON object echoing every effective
// parameter; `outputs` lists files that exist once the command succeeded.
void write_manifest(const std::string& out_dir, const std::string& command,
                    const nlohmann::json& config, std::uint64_t master_seed,
                    double wall_clock_sec,
                    const std::vector<std::string>& outputs,
                    const std::vector<std::string>& warnings) {
  nlohmann::json j;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  j["command"] = command;
  j["config"] = config;
  j["master_seed"] = master_seed;
  j["wall_clock_sec"] = wall_clock_sec;
  j["outputs"] = outputs;
  j["warnings"] = warnings;
  write_text_file((fs::path(out_dir) / "manifest.json").string(), j.dump(2) + "\n");
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

// --- experiment / sweep -----------------------------------------------------

struct ExperimentArgs {
  std::string preset_tag;
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  bool seed_set = false;
  int jobs = 1;
  int reps = 0;       // 0 = keep preset value
  int functions = 0;  // 0 = keep preset value
  std::vector<double> deltas;
};

gpb::experiments::ExperimentConfig resolve_config(const ExperimentArgs& a) {
  if (a.preset_tag.empty() == a.config_path.empty())
    throw std::invalid_argument(
        "pass exactly one of: a preset tag, or --config FILE");
  gpb::experiments::ExperimentConfig cfg =
      a.preset_tag.empty()
          ? gpb::experiments::config_from_json(read_text_file(a.config_path))
          : gpb::experiments::preset(a.preset_tag);
  if (a.seed_set) cfg.master_seed = a.seed;
  if (a.reps > 0) cfg.n_reps = a.reps;
  if (a.functions > 0) cfg.n_functions = a.functions;
  if (!a.deltas.empty()) cfg.deltas = a.deltas;
  gpb::experiments::validate(cfg);
  return cfg;
}

int cmd_experiment(const ExperimentArgs& a) {
  const Stopwatch clock;
  const gpb::experiments::ExperimentConfig cfg = resolve_config(a);
  const gpb::experiments::CoverageReport report =
      gpb::experiments::run_experiment(cfg, a.jobs);
  fs::create_directories(a.out_dir);
  const std::vector<std::string> outputs =
      gpb::experiments::write_report_outputs(a.out_dir, report);
  std::vector<std::string> warnings;
  if (report.factorization_failures > 0)
    warnings.push_back(std::to_string(report.factorization_failures) +
                       " instance(s) dropped: factorization failure");
  write_manifest(a.out_dir, "experiment",
                 nlohmann::json::parse(gpb::experiments::config_to_json(cfg)),
                 cfg.master_seed, clock.seconds(), outputs, warnings);
  for (const auto& agg : report.aggregates)
    std::cout << cfg.tag << " delta=" << agg.delta << ": failures "
              << agg.failures << "/" << agg.reps << "\n";
  return 0;
}

int cmd_sweep(const ExperimentArgs& a) {
  const Stopwatch clock;
  const gpb::experiments::ExperimentConfig cfg = resolve_config(a);
  const gpb::experiments::SweepReport report =
      gpb::experiments::run_sweep(cfg, a.jobs);
  fs::create_directories(a.out_dir);
  const std::string sweep_path = (fs::path(a.out_dir) / "sweep.csv").string();
  gpb::experiments::write_sweep_csv(sweep_path, report);
  std::vector<std::string> warnings;
  if (report.factorization_failures > 0)
    warnings.push_back(std::to_string(report.factorization_failures) +
                       " instance(s) dropped: factorization failure");
  write_manifest(a.out_dir, "sweep",
                 nlohmann::json::parse(gpb::experiments::config_to_json(cfg)),
                 cfg.master_seed, clock.seconds(), {sweep_path}, warnings);
  std::cout << cfg.tag << ": " << report.scaling_mean.size()
            << " scalings written to " << sweep_path << "\n";
  return 0;
}

// --- sample-function ----------------------------------------------------------

struct SampleArgs {
  std::string kernel_family = "se";
  double lengthscale = 0.2;
  double variance = 1.0;
  std::string sampler = "pre_rkhs";
  double B = 2.0;
  std::uint64_t seed = 20260825ull;
  std::string out_dir = "out";
  double grid_low = -1.0, grid_high = 1.0;
  int grid_points = 1000;
  int n_min = 5, n_max = 200;
  double sigma_f2 = 1.0;
  int max_basis = 50, onb_n_min = 5, onb_n_max = 50;
};

int cmd_sample_function(const SampleArgs& a) {
  const Stopwatch clock;
  gpb::kernels::KernelSpec kernel;
  kernel.family = gpb::kernels::family_from_name(a.kernel_family);
  kernel.lengthscale = a.lengthscale;
  kernel.variance = a.variance;
  gpb::kernels::validate(kernel);
  const gpb::kernels::Grid grid =
      gpb::kernels::make_equidistant_grid(a.grid_low, a.grid_high, a.grid_points);

  gpb::rng::Engine eng = gpb::rng::make_engine(a.seed, 0, gpb::rng::kTruthStream);
  gpb::rkhs::RkhsFunction fn;
  if (a.sampler == "pre_rkhs") {
    fn = gpb::rkhs::sample_pre_rkhs(kernel, grid, a.B, a.n_min, a.n_max,
                                    std::sqrt(a.sigma_f2), eng);
  } else if (a.sampler == "onb") {
    fn = gpb::rkhs::sample_onb(kernel.lengthscale, grid, a.B, a.max_basis,
                               a.onb_n_min, a.onb_n_max, eng);
  } else {
    throw std::invalid_argument("unknown sampler: \"" + a.sampler + "\"");
  }

  fs::create_directories(a.out_dir);
  const std::string fn_path = (fs::path(a.out_dir) / "function.json").string();
  write_text_file(fn_path, gpb::rkhs::to_json_string(fn) + "\n");

  nlohmann::json config = {
      {"kernel",
       {{"family", a.kernel_family},
        {"lengthscale", a.lengthscale},
        {"variance", a.variance}}},
      {"sampler", a.sampler},
      {"B", a.B},
      {"grid", {{"low", a.grid_low}, {"high", a.grid_high}, {"points", a.grid_points}}},
      {"n_min", a.n_min},
      {"n_max", a.n_max},
      {"sigma_f2", a.sigma_f2},
      {"max_basis", a.max_basis},
      {"onb_n_min", a.onb_n_min},
      {"onb_n_max", a.onb_n_max}};
  write_manifest(a.out_dir, "sample-function", config, a.seed, clock.seconds(),
                 {fn_path}, {});
  std::cout << "sampled " << a.sampler << " function, declared norm "
            << fn.declared_norm << ", to " << fn_path << "\n";
  return 0;
}

// --- fit-and-bound --------------------------------------------------------------

struct FitArgs {
  std::string data_path;
  std::string function_path;  // optional ground truth for a coverage verdict
  std::string kernel_family = "se";
  double lengthscale = 0.2;
  double variance = 1.0;
  double lambda = 0.5;
  double B = 2.0;
  double R = 0.5;
  double delta = 0.1;
  std::string method = "nominal";
  double eps_tilde = 0.0;
  std::string out_dir = "out";
  double grid_low = -1.0, grid_high = 1.0;
  int grid_points = 1000;
};

gpb::gpr::Dataset read_data_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read dataset: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "x,y")
    throw std::invalid_argument("dataset must start with header 'x,y': " + path);
  gpb::gpr::Dataset data;
  std::vector<double> ys;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string xs, yss;
    if (!std::getline(row, xs, ',') || !std::getline(row, yss))
      throw std::invalid_argument("dataset row " + std::to_string(line_no) +
                                  " is not 'x,y': " + path);
    try {
      data.inputs.push_back(std::stod(xs));
      ys.push_back(std::stod(yss));
    } catch (const std::exception&) {
      throw std::invalid_argument("dataset row " + std::to_string(line_no) +
                                  " has a non-numeric field: " + path);
    }
  }
  if (data.inputs.empty())
    throw std::invalid_argument("dataset has no rows: " + path);
  data.targets = Eigen::Map<const Eigen::VectorXd>(
      ys.data(), static_cast<Eigen::Index>(ys.size()));

  // Optional sidecar with generation metadata.
  const std::string meta_path = path + ".meta.json";
  if (fs::exists(meta_path)) {
    const nlohmann::json meta = nlohmann::json::parse(read_text_file(meta_path));
    data.noise_sd = meta.value("noise_sd", 0.0);
    data.seed = meta.value("seed", std::uint64_t{0});
  }
  return data;
}

int cmd_fit_and_bound(const FitArgs& a) {
  const Stopwatch clock;
  gpb::kernels::KernelSpec kernel;
  kernel.family = gpb::kernels::family_from_name(a.kernel_family);
  kernel.lengthscale = a.lengthscale;
  kernel.variance = a.variance;
  gpb::kernels::validate(kernel);
  const gpb::bounds::Method method = gpb::bounds::method_from_name(a.method);

  gpb::bounds::BoundParams bp;
  bp.B = a.B;
  bp.R = a.R;
  bp.lambda = a.lambda;
  bp.delta = a.delta;
  bp.eps_tilde = a.eps_tilde;
  gpb::bounds::validate(bp);
  const bool robust = method == gpb::bounds::Method::RobustNominal ||
                      method == gpb::bounds::Method::RobustIndependent;
  if (!robust && a.eps_tilde != 0.0)
    throw std::invalid_argument(
        "--eps-tilde only applies to the robust tube methods");

  const gpb::gpr::Dataset data = read_data_csv(a.data_path);
  const gpb::gpr::GprPosterior post = gpb::gpr::fit(kernel, a.lambda, data);
  const gpb::kernels::Grid grid =
      gpb::kernels::make_equidistant_grid(a.grid_low, a.grid_high, a.grid_points);

  std::vector<gpb::bounds::TubeEvaluation> tube;
  tube.reserve(grid.points.size());
  for (double x : grid.points) {
    switch (method) {
      case gpb::bounds::Method::Nominal:
        tube.push_back(gpb::bounds::nominal_halfwidth(post, bp, x));
        break;
      case gpb::bounds::Method::Independent:
        tube.push_back(gpb::bounds::independent_halfwidth(post, bp, x));
        break;
      case gpb::bounds::Method::RobustNominal:
        tube.push_back(gpb::bounds::robust_halfwidth(post, bp, x));
        break;
      case gpb::bounds::Method::RobustIndependent:
        tube.push_back(gpb::bounds::robust_independent_halfwidth(post, bp, x));
        break;
    }
  }

  fs::create_directories(a.out_dir);
  const std::string tube_path = (fs::path(a.out_dir) / "tube.csv").string();
  gpb::bounds::write_tube_csv(tube_path, tube);
  std::vector<std::string> outputs{tube_path};

  nlohmann::json config = {
      {"data", a.data_path},
      {"kernel",
       {{"family", a.kernel_family},
        {"lengthscale", a.lengthscale},
        {"variance", a.variance}}},
      {"lambda", a.lambda},
      {"B", a.B},
      {"R", a.R},
      {"delta", a.delta},
      {"method", a.method},
      {"eps_tilde", a.eps_tilde},
      {"grid", {{"low", a.grid_low}, {"high", a.grid_high}, {"points", a.grid_points}}},
      {"n_train", static_cast<long>(data.inputs.size())}};

  if (!a.function_path.empty()) {
    const gpb::rkhs::RkhsFunction truth =
        gpb::rkhs::from_json_string(read_text_file(a.function_path));
    long violations = 0;
    for (std::size_t i = 0; i < tube.size(); ++i) {
      const double t = gpb::rkhs::evaluate(truth, tube[i].query);
      if (std::abs(t - tube[i].mean) > tube[i].halfwidth) ++violations;
    }
    config["coverage"] = {{"function", a.function_path},
                          {"violations", violations},
                          {"contained", violations == 0}};
    std::cout << "coverage: " << (violations == 0 ? "contained" : "violated")
              << " (" << violations << " grid points outside)\n";
  }

  write_manifest(a.out_dir, "fit-and-bound", config, data.seed, clock.seconds(),
                 outputs, {});
  std::cout << "tube (" << a.method << ", delta=" << a.delta << ") written to "
            << tube_path << "\n";
  return 0;
}

// --- control-demo ----------------------------------------------------------------

struct DemoArgs {
  std::uint64_t seed = 20260825ull;
  std::string out_dir = "out";
};

int cmd_control_demo(const DemoArgs& a) {
  const Stopwatch clock;
  const gpb::control_demo::DisturbanceSet ds =
      gpb::control_demo::run_control_demo(a.seed);
  fs::create_directories(a.out_dir);
  const std::string csv_path =
      (fs::path(a.out_dir) / "disturbance_sets.csv").string();
  gpb::control_demo::write_disturbance_csv(csv_path, ds);
  write_manifest(a.out_dir, "control-demo",
                 nlohmann::json::parse(gpb::control_demo::manifest_json(ds)),
                 a.seed, clock.seconds(), {csv_path}, {});
  std::cout << "disturbance sets written to " << csv_path
            << " (verdict: " << (ds.contained ? "contained" : "violated")
            << ", beta=" << ds.beta << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"GPR frequentist uncertainty tubes: experiments and tools"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  ExperimentArgs exp_args;
  const auto add_experiment_options = [&](CLI::App* sub) {
    sub->add_option("preset", exp_args.preset_tag,
                    "built-in experiment tag (see --list)");
    sub->add_option("--config", exp_args.config_path, "JSON config file");
    sub->add_option("--out", exp_args.out_dir, "output directory");
    sub->add_option("--seed", exp_args.seed, "master seed override")
        ->each([&](const std::string&) { exp_args.seed_set = true; });
    sub->add_option("--jobs", exp_args.jobs, "worker threads (0 = all cores)");
    sub->add_option("--reps", exp_args.reps, "override repetitions per function");
    sub->add_option("--functions", exp_args.functions,
                    "override number of ground-truth functions");
    sub->add_option("--delta", exp_args.deltas, "confidence levels")
        ->delimiter(',');
  };
  CLI::App* exp_cmd =
      app.add_subcommand("experiment", "Monte-Carlo coverage experiment");
  add_experiment_options(exp_cmd);
  bool list_presets = false;
  exp_cmd->add_flag("--list", list_presets, "list preset tags and exit");
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "tube-scaling conservatism sweep");
  add_experiment_options(sweep_cmd);

  SampleArgs sample_args;
  CLI::App* sample_cmd = app.add_subcommand(
      "sample-function", "draw a ground truth of prescribed RKHS norm");
  sample_cmd->add_option("--kernel", sample_args.kernel_family, "se|matern32");
  sample_cmd->add_option("--lengthscale", sample_args.lengthscale, "kernel length-scale");
  sample_cmd->add_option("--variance", sample_args.variance, "kernel variance");
  sample_cmd->add_option("--sampler", sample_args.sampler, "pre_rkhs|onb");
  sample_cmd->add_option("--B", sample_args.B, "target RKHS norm");
  sample_cmd->add_option("--seed", sample_args.seed, "draw seed");
  sample_cmd->add_option("--out", sample_args.out_dir, "output directory");
  sample_cmd->add_option("--grid-low", sample_args.grid_low, "grid lower bound");
  sample_cmd->add_option("--grid-high", sample_args.grid_high, "grid upper bound");
  sample_cmd->add_option("--grid-points", sample_args.grid_points, "grid size");
  sample_cmd->add_option("--n-min", sample_args.n_min, "min pre-RKHS centers");
  sample_cmd->add_option("--n-max", sample_args.n_max, "max pre-RKHS centers");
  sample_cmd->add_option("--sigma-f2", sample_args.sigma_f2,
                         "pre-RKHS coefficient variance");
  sample_cmd->add_option("--max-basis", sample_args.max_basis, "ONB pool size");
  sample_cmd->add_option("--onb-n-min", sample_args.onb_n_min,
                         "min active ONB functions");
  sample_cmd->add_option("--onb-n-max", sample_args.onb_n_max,
                         "max active ONB functions");

  FitArgs fit_args;
  CLI::App* fit_cmd = app.add_subcommand(
      "fit-and-bound", "fit GPR to a dataset CSV and emit a tube over a grid");
  fit_cmd->add_option("--data", fit_args.data_path, "dataset CSV (header x,y)")
      ->required();
  fit_cmd->add_option("--function", fit_args.function_path,
                      "ground-truth JSON for a coverage verdict");
  fit_cmd->add_option("--kernel", fit_args.kernel_family, "se|matern32");
  fit_cmd->add_option("--lengthscale", fit_args.lengthscale, "kernel length-scale");
  fit_cmd->add_option("--variance", fit_args.variance, "kernel variance");
  fit_cmd->add_option("--lambda", fit_args.lambda, "nominal noise variance");
  fit_cmd->add_option("--B", fit_args.B, "RKHS norm bound");
  fit_cmd->add_option("--R", fit_args.R, "subgaussian noise scale");
  fit_cmd->add_option("--delta", fit_args.delta, "confidence level");
  fit_cmd->add_option("--method", fit_args.method,
                      "nominal|independent|robust|robust-independent");
  fit_cmd->add_option("--eps-tilde", fit_args.eps_tilde,
                      "kernel sup-distance (robust methods)");
  fit_cmd->add_option("--out", fit_args.out_dir, "output directory");
  fit_cmd->add_option("--grid-low", fit_args.grid_low, "grid lower bound");
  fit_cmd->add_option("--grid-high", fit_args.grid_high, "grid upper bound");
  fit_cmd->add_option("--grid-points", fit_args.grid_points, "grid size");

  DemoArgs demo_args;
  CLI::App* demo_cmd =
      app.add_subcommand("control-demo", "disturbance-set generation demo");
  demo_cmd->add_option("--seed", demo_args.seed, "pipeline seed");
  demo_cmd->add_option("--out", demo_args.out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(exp_cmd)) {
      if (list_presets) {
        for (const std::string& tag : gpb::experiments::preset_tags())
          std::cout << tag << "\n";
        return 0;
      }
      return cmd_experiment(exp_args);
    }
    if (app.got_subcommand(sweep_cmd)) return cmd_sweep(exp_args);
    if (app.got_subcommand(sample_cmd)) return cmd_sample_function(sample_args);
    if (app.got_subcommand(fit_cmd)) return cmd_fit_and_bound(fit_args);
    if (app.got_subcommand(demo_cmd)) return cmd_control_demo(demo_args);
    std::cerr << "no subcommand selected\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const gpb::numerics::FactorizationFailure& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const gpb::rkhs::DegenerateDraw& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
