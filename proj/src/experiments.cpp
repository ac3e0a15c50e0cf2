#include "gpbounds/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <random>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace gpb::experiments {

std::string sampler_name(Sampler s) {
  return s == Sampler::PreRkhs ? "pre_rkhs" : "onb";
}

Sampler sampler_from_name(const std::string& name) {
  if (name == "pre_rkhs") return Sampler::PreRkhs;
  if (name == "onb") return Sampler::Onb;
  throw std::invalid_argument("unknown sampler: \"" + name +
                              "\" (expected \"pre_rkhs\" or \"onb\")");
}

void validate(const ExperimentConfig& cfg) {
  kernels::validate(cfg.truth_kernel);
  kernels::validate(cfg.model_kernel);
  if (cfg.grid.points < 2 || !(cfg.grid.low < cfg.grid.high))
    throw std::invalid_argument("config: invalid grid specification");
  if (cfg.n_functions < 1 || cfg.n_reps < 1 || cfg.n_train < 1)
    throw std::invalid_argument("config: counts must be >= 1");
  if (cfg.grid.points < cfg.n_train)
    throw std::invalid_argument("config: grid must have at least n_train points");
  if (!(cfg.noise_sd >= 0.0))
    throw std::invalid_argument("config: noise_sd must be >= 0");
  if (!(cfg.lambda > 0.0))
    throw std::invalid_argument("config: lambda must be > 0");
  if (!(cfg.B > 0.0)) throw std::invalid_argument("config: B must be > 0");
  if (!(cfg.R >= 0.0)) throw std::invalid_argument("config: R must be >= 0");
  if (cfg.deltas.empty())
    throw std::invalid_argument("config: delta list must be non-empty");
  for (double d : cfg.deltas)
    if (!(d > 0.0 && d < 1.0))
      throw std::invalid_argument("config: every delta must lie in (0, 1)");
  const SamplerParams& sp = cfg.sampler_params;
  if (cfg.sampler == Sampler::PreRkhs) {
    if (sp.n_min < 1 || sp.n_min > sp.n_max || sp.n_max > cfg.grid.points)
      throw std::invalid_argument("config: need 1 <= n_min <= n_max <= grid points");
    if (!(sp.sigma_f2 > 0.0))
      throw std::invalid_argument("config: sigma_f2 must be > 0");
  } else {
    if (cfg.truth_kernel.family != kernels::Family::SquaredExponential ||
        cfg.truth_kernel.variance != 1.0)
      throw std::invalid_argument(
          "config: the ONB sampler requires a variance-1 SE truth kernel");
    if (sp.onb_n_min < 1 || sp.onb_n_min > sp.onb_n_max ||
        sp.onb_n_max > sp.onb_max_basis)
      throw std::invalid_argument(
          "config: need 1 <= onb_n_min <= onb_n_max <= onb_max_basis");
  }
  if (cfg.sweep) {
    if (cfg.sweep->n_scalings < 2)
      throw std::invalid_argument("config: sweep needs at least 2 scalings");
    if (!(cfg.sweep->low > 0.0))
      throw std::invalid_argument("config: sweep low scaling must be > 0");
  }
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

// ONB-sampled truths use the basis width directly as the exponent scale
// (basis exp(-x^2 / w^2) for width w). Expressed as a KernelSpec length-scale
// (convention exp(-r^2 / (2 l^2))) a basis of width w spans the SE kernel
// with l = w / sqrt(2).
double onb_truth_lengthscale(double basis_width) {
  return basis_width / std::sqrt(2.0);
}

kernels::KernelSpec se(double lengthscale, double variance = 1.0) {
  return {kernels::Family::SquaredExponential, lengthscale, variance};
}

kernels::KernelSpec matern32(double lengthscale, double variance = 1.0) {
  return {kernels::Family::Matern32, lengthscale, variance};
}

}  // namespace

ExperimentConfig preset(const std::string& tag) {
  ExperimentConfig cfg;  // defaults: 50 fn x 10000 reps, N=50, noise 0.5,
                         // lambda 0.5, B 2, R 0.5, 1000-point grid on [-1,1]
  cfg.tag = tag;
  if (tag == "exp_1_1_a") {  // nominal, SE, pre-RKHS truths
    cfg.truth_kernel = cfg.model_kernel = se(0.2);
  } else if (tag == "exp_1_1_b") {  // nominal, Matern-3/2, pre-RKHS truths
    cfg.truth_kernel = cfg.model_kernel = matern32(0.2);
  } else if (tag == "exp_1_2_a") {  // conservatism sweep of exp_1_1_a
    cfg.truth_kernel = cfg.model_kernel = se(0.2);
    cfg.deltas = {0.01};
    cfg.sweep = SweepSpec{};
  } else if (tag == "exp_1_2_b") {  // conservatism sweep of exp_1_1_b
    cfg.truth_kernel = cfg.model_kernel = matern32(0.2);
    cfg.deltas = {0.01};
    cfg.sweep = SweepSpec{};
  } else if (tag == "exp_1_2_c") {  // conservatism sweep, ONB truths
    cfg.truth_kernel = se(onb_truth_lengthscale(0.2));
    cfg.model_kernel = se(0.2);
    cfg.sampler = Sampler::Onb;
    cfg.deltas = {0.01};
    cfg.sweep = SweepSpec{};
  } else if (tag == "exp_1_3_a") {  // benign misspecification, ONB truths
    cfg.truth_kernel = se(onb_truth_lengthscale(0.5));
    cfg.model_kernel = se(0.2);
    cfg.sampler = Sampler::Onb;
  } else if (tag == "exp_1_4_a") {  // problematic misspecification, pre-RKHS
    cfg.truth_kernel = se(0.2);
    cfg.model_kernel = se(0.5);
  } else if (tag == "exp_1_4_b") {  // problematic misspecification, ONB truths
    cfg.truth_kernel = se(onb_truth_lengthscale(0.2));
    cfg.model_kernel = se(0.5);
    cfg.sampler = Sampler::Onb;
  } else if (tag == "robust") {  // problematic pair, misspecification-robust tube
    cfg.truth_kernel = se(onb_truth_lengthscale(0.2));
    cfg.model_kernel = se(0.5);
    cfg.sampler = Sampler::Onb;
    cfg.bound_method = bounds::Method::RobustNominal;
  } else {
    throw std::invalid_argument("unknown experiment preset: \"" + tag + "\"");
  }
  validate(cfg);
  return cfg;
}

std::vector<std::string> preset_tags() {
  return {"exp_1_1_a", "exp_1_1_b", "exp_1_2_a", "exp_1_2_b", "exp_1_2_c",
          "exp_1_3_a", "exp_1_4_a", "exp_1_4_b", "robust"};
}

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

namespace {

nlohmann::json kernel_to_json(const kernels::KernelSpec& k) {
  return {{"family", kernels::family_name(k.family)},
          {"lengthscale", k.lengthscale},
          {"variance", k.variance}};
}

kernels::KernelSpec kernel_from_json(const nlohmann::json& j) {
  kernels::KernelSpec k;
  k.family = kernels::family_from_name(j.at("family").get<std::string>());
  k.lengthscale = j.at("lengthscale").get<double>();
  k.variance = j.at("variance").get<double>();
  return k;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["tag"] = cfg.tag;
  j["truth_kernel"] = kernel_to_json(cfg.truth_kernel);
  j["model_kernel"] = kernel_to_json(cfg.model_kernel);
  j["sampler"] = sampler_name(cfg.sampler);
  j["grid"] = {{"low", cfg.grid.low},
               {"high", cfg.grid.high},
               {"points", cfg.grid.points}};
  j["n_functions"] = cfg.n_functions;
  j["n_reps"] = cfg.n_reps;
  j["n_train"] = cfg.n_train;
  j["noise_sd"] = cfg.noise_sd;
  j["lambda"] = cfg.lambda;
  j["bound"] = {{"B", cfg.B},
                {"R", cfg.R},
                {"deltas", cfg.deltas},
                {"method", bounds::method_name(cfg.bound_method)}};
  j["sampler_params"] = {{"n_min", cfg.sampler_params.n_min},
                         {"n_max", cfg.sampler_params.n_max},
                         {"sigma_f2", cfg.sampler_params.sigma_f2},
                         {"onb_max_basis", cfg.sampler_params.onb_max_basis},
                         {"onb_n_min", cfg.sampler_params.onb_n_min},
                         {"onb_n_max", cfg.sampler_params.onb_n_max}};
  if (cfg.sweep)
    j["sweep"] = {{"n_scalings", cfg.sweep->n_scalings},
                  {"low", cfg.sweep->low}};
  j["master_seed"] = cfg.master_seed;
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config parse error: ") + e.what());
  }
  ExperimentConfig cfg;
  try {
    cfg.tag = j.value("tag", std::string("custom"));
    cfg.truth_kernel = kernel_from_json(j.at("truth_kernel"));
    cfg.model_kernel = kernel_from_json(j.at("model_kernel"));
    cfg.sampler = sampler_from_name(j.at("sampler").get<std::string>());
    if (j.contains("grid")) {
      cfg.grid.low = j["grid"].value("low", -1.0);
      cfg.grid.high = j["grid"].value("high", 1.0);
      cfg.grid.points = j["grid"].value("points", 1000);
    }
    cfg.n_functions = j.value("n_functions", cfg.n_functions);
    cfg.n_reps = j.value("n_reps", cfg.n_reps);
    cfg.n_train = j.value("n_train", cfg.n_train);
    cfg.noise_sd = j.value("noise_sd", cfg.noise_sd);
    cfg.lambda = j.value("lambda", cfg.lambda);
    if (j.contains("bound")) {
      const auto& jb = j["bound"];
      cfg.B = jb.value("B", cfg.B);
      cfg.R = jb.value("R", cfg.R);
      if (jb.contains("deltas"))
        cfg.deltas = jb["deltas"].get<std::vector<double>>();
      if (jb.contains("method"))
        cfg.bound_method =
            bounds::method_from_name(jb["method"].get<std::string>());
    }
    if (j.contains("sampler_params")) {
      const auto& js = j["sampler_params"];
      SamplerParams& sp = cfg.sampler_params;
      sp.n_min = js.value("n_min", sp.n_min);
      sp.n_max = js.value("n_max", sp.n_max);
      sp.sigma_f2 = js.value("sigma_f2", sp.sigma_f2);
      sp.onb_max_basis = js.value("onb_max_basis", sp.onb_max_basis);
      sp.onb_n_min = js.value("onb_n_min", sp.onb_n_min);
      sp.onb_n_max = js.value("onb_n_max", sp.onb_n_max);
    }
    if (j.contains("sweep")) {
      SweepSpec sw;
      sw.n_scalings = j["sweep"].value("n_scalings", sw.n_scalings);
      sw.low = j["sweep"].value("low", sw.low);
      cfg.sweep = sw;
    }
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config field error: ") + e.what());
  }
  validate(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// Sampling and the per-instance pipeline
// ---------------------------------------------------------------------------

rkhs::RkhsFunction sample_truth(const ExperimentConfig& cfg, int function_id) {
  rng::Engine eng = rng::make_engine(
      cfg.master_seed, static_cast<std::uint64_t>(function_id), rng::kTruthStream);
  const kernels::Grid grid =
      kernels::make_equidistant_grid(cfg.grid.low, cfg.grid.high, cfg.grid.points);
  const SamplerParams& sp = cfg.sampler_params;
  if (cfg.sampler == Sampler::PreRkhs)
    return rkhs::sample_pre_rkhs(cfg.truth_kernel, grid, cfg.B, sp.n_min,
                                 sp.n_max, std::sqrt(sp.sigma_f2), eng);
  return rkhs::sample_onb(cfg.truth_kernel.lengthscale, grid, cfg.B,
                          sp.onb_max_basis, sp.onb_n_min, sp.onb_n_max, eng);
}

namespace {

// Training draw for instance (function_id, rep_id): first the n_train grid
// indices (uniform, with replacement), then the noise values. noise_sd = 0
// consumes no RNG.
void draw_instance_data(const ExperimentConfig& cfg,
                        const Eigen::VectorXd& truth_vals, int function_id,
                        int rep_id, std::vector<int>& idx, Eigen::VectorXd& y) {
  rng::Engine eng = rng::make_engine(cfg.master_seed,
                                     static_cast<std::uint64_t>(function_id),
                                     static_cast<std::uint64_t>(rep_id));
  std::uniform_int_distribution<int> pick(0, cfg.grid.points - 1);
  idx.resize(static_cast<std::size_t>(cfg.n_train));
  for (int& i : idx) i = pick(eng);
  y.resize(cfg.n_train);
  for (int i = 0; i < cfg.n_train; ++i) y(i) = truth_vals(idx[static_cast<std::size_t>(i)]);
  if (cfg.noise_sd > 0.0) {
    std::normal_distribution<double> noise(0.0, cfg.noise_sd);
    for (int i = 0; i < cfg.n_train; ++i) y(i) += noise(eng);
  }
}

// Tube evaluation for one fitted instance; shared verbatim by the public
// run_instance and the cached harness path.
InstanceRecord evaluate_instance(const ExperimentConfig& cfg, double eps_tilde,
                                 const Eigen::VectorXd& truth_vals,
                                 const Eigen::MatrixXd& K_train,
                                 const Eigen::MatrixXd& Kxn,
                                 const gpr::Dataset& data, int function_id,
                                 int rep_id) {
  InstanceRecord rec;
  rec.function_id = function_id;
  rec.rep_id = rep_id;

  const gpr::GprPosterior post =
      gpr::fit_with_gram(cfg.model_kernel, cfg.lambda, data, K_train);

  const bool beta_based = cfg.bound_method == bounds::Method::Nominal ||
                          cfg.bound_method == bounds::Method::RobustNominal;
  const bool need_weights = cfg.bound_method != bounds::Method::Nominal;
  const gpr::GridEvaluation ge = gpr::evaluate_columns(post, Kxn, need_weights);
  const Eigen::ArrayXd abs_err = (truth_vals - ge.mean).array().abs();

  const std::size_t n_delta = cfg.deltas.size();
  rec.violated.assign(n_delta, 0);
  rec.width_mean.assign(n_delta, 0.0);
  rec.width_sd.assign(n_delta, 0.0);

  // beta-based tubes share one log-determinant across all deltas.
  double logdet_value = 0.0;
  if (beta_based) {
    const double shift = bounds::beta_shift(
        cfg.lambda, cfg.bound_method == bounds::Method::RobustNominal ? eps_tilde : 0.0,
        post.n());
    logdet_value = numerics::logdet(numerics::cholesky(K_train, shift));
    rec.beta.resize(n_delta);
  }

  // Robust ingredients are delta-independent.
  Eigen::ArrayXd C, S2;
  if (cfg.bound_method == bounds::Method::RobustNominal ||
      cfg.bound_method == bounds::Method::RobustIndependent) {
    const double inv_norm = numerics::inv_spectral_norm(post.factor);
    const double sqrt_n_eps =
        std::sqrt(static_cast<double>(post.n())) * eps_tilde;
    C.resize(ge.mean.size());
    S2.resize(ge.mean.size());
    for (Eigen::Index q = 0; q < ge.mean.size(); ++q) {
      C(q) = bounds::detail::robust_C_value(cfg.lambda, inv_norm,
                                            ge.cross_norm(q), sqrt_n_eps);
      S2(q) = bounds::detail::robust_S2_value(eps_tilde, sqrt_n_eps,
                                              ge.weight_norm(q),
                                              ge.cross_norm(q), C(q));
    }
  }

  Eigen::ArrayXd hw(ge.mean.size());
  for (std::size_t d = 0; d < n_delta; ++d) {
    const double delta = cfg.deltas[d];
    switch (cfg.bound_method) {
      case bounds::Method::Nominal: {
        const double beta =
            bounds::beta_from_logdet(cfg.B, cfg.R, delta, logdet_value);
        rec.beta[d] = beta;
        hw = beta * ge.variance.array().sqrt();
        break;
      }
      case bounds::Method::Independent: {
        const double ct =
            bounds::detail::independent_count_term(post.n(), delta);
        hw = cfg.B * ge.variance.array().sqrt() +
             cfg.R * ct * ge.weight_norm.array();
        break;
      }
      case bounds::Method::RobustNominal: {
        const double beta =
            bounds::beta_from_logdet(cfg.B, cfg.R, delta, logdet_value);
        rec.beta[d] = beta;
        for (Eigen::Index q = 0; q < hw.size(); ++q)
          hw(q) = bounds::detail::robust_halfwidth_value(
              beta, ge.variance(q), S2(q), C(q), post.targets_norm);
        break;
      }
      case bounds::Method::RobustIndependent: {
        const double ct =
            bounds::detail::independent_count_term(post.n(), delta);
        for (Eigen::Index q = 0; q < hw.size(); ++q)
          hw(q) = bounds::detail::robust_independent_halfwidth_value(
              cfg.B, cfg.R, ge.variance(q), S2(q), C(q), post.targets_norm,
              ge.weight_norm(q), ct);
        break;
      }
    }
    rec.violated[d] = (abs_err > hw).any() ? 1 : 0;
    const double m = hw.mean();
    rec.width_mean[d] = m;
    rec.width_sd[d] = std::sqrt((hw - m).square().mean());
  }
  return rec;
}

struct HarnessCache {
  kernels::Grid grid;
  Eigen::MatrixXd K_grid;  // model-kernel Gram over the full grid
  std::vector<Eigen::VectorXd> truth_vals;
  double eps_tilde = 0.0;
};

HarnessCache build_cache(const ExperimentConfig& cfg) {
  HarnessCache cache;
  cache.grid =
      kernels::make_equidistant_grid(cfg.grid.low, cfg.grid.high, cfg.grid.points);
  cache.K_grid = kernels::gram(cfg.model_kernel, cache.grid.points);
  cache.truth_vals.reserve(static_cast<std::size_t>(cfg.n_functions));
  for (int fid = 0; fid < cfg.n_functions; ++fid)
    cache.truth_vals.push_back(
        rkhs::evaluate_on(sample_truth(cfg, fid), cache.grid.points));
  if (cfg.bound_method == bounds::Method::RobustNominal ||
      cfg.bound_method == bounds::Method::RobustIndependent)
    cache.eps_tilde =
        kernels::sup_distance(cfg.model_kernel, cfg.truth_kernel, cache.grid);
  return cache;
}

InstanceRecord run_instance_cached(const ExperimentConfig& cfg,
                                   const HarnessCache& cache, int function_id,
                                   int rep_id) {
  std::vector<int> idx;
  Eigen::VectorXd y;
  draw_instance_data(cfg, cache.truth_vals[static_cast<std::size_t>(function_id)],
                     function_id, rep_id, idx, y);

  gpr::Dataset data;
  data.inputs.reserve(idx.size());
  for (int i : idx) data.inputs.push_back(cache.grid.points[static_cast<std::size_t>(i)]);
  data.targets = y;
  data.noise_sd = cfg.noise_sd;
  data.seed = rng::mix_seed(cfg.master_seed, static_cast<std::uint64_t>(function_id),
                            static_cast<std::uint64_t>(rep_id));

  // Gather the training Gram and cross-kernel blocks from the cached
  // full-grid Gram; entries coincide bitwise with direct kernel evaluation.
  const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
  const Eigen::Index q = static_cast<Eigen::Index>(cache.grid.points.size());
  Eigen::MatrixXd K_train(n, n), Kxn(n, q);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      K_train(i, j) = cache.K_grid(idx[static_cast<std::size_t>(i)],
                                   idx[static_cast<std::size_t>(j)]);
  for (Eigen::Index c = 0; c < q; ++c)
    for (Eigen::Index i = 0; i < n; ++i)
      Kxn(i, c) = cache.K_grid(idx[static_cast<std::size_t>(i)], c);

  return evaluate_instance(cfg, cache.eps_tilde,
                           cache.truth_vals[static_cast<std::size_t>(function_id)],
                           K_train, Kxn, data, function_id, rep_id);
}

// Runs fn(0..total-1) on `jobs` workers; rethrows the first worker exception.
void parallel_instances(long total, int jobs,
                        const std::function<void(long)>& fn) {
  if (jobs <= 0) {
    const unsigned hc = std::thread::hardware_concurrency();
    jobs = hc > 0 ? static_cast<int>(hc) : 1;
  }
  if (jobs == 1) {
    for (long i = 0; i < total; ++i) fn(i);
    return;
  }
  std::atomic<long> next(0);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= total) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(jobs));
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Population mean/SD over a deterministic iteration order.
struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

template <typename Values>
MeanSd mean_sd(const Values& v) {
  if (v.empty()) return {};
  double s = 0.0;
  for (double x : v) s += x;
  const double m = s / static_cast<double>(v.size());
  double q = 0.0;
  for (double x : v) q += (x - m) * (x - m);
  return {m, std::sqrt(q / static_cast<double>(v.size()))};
}

}  // namespace

InstanceRecord run_instance(const rkhs::RkhsFunction& truth,
                            const ExperimentConfig& cfg, int function_id,
                            int rep_id) {
  validate(cfg);
  const kernels::Grid grid =
      kernels::make_equidistant_grid(cfg.grid.low, cfg.grid.high, cfg.grid.points);
  const Eigen::VectorXd truth_vals = rkhs::evaluate_on(truth, grid.points);

  std::vector<int> idx;
  Eigen::VectorXd y;
  draw_instance_data(cfg, truth_vals, function_id, rep_id, idx, y);

  gpr::Dataset data;
  data.inputs.reserve(idx.size());
  for (int i : idx) data.inputs.push_back(grid.points[static_cast<std::size_t>(i)]);
  data.targets = y;
  data.noise_sd = cfg.noise_sd;
  data.seed = rng::mix_seed(cfg.master_seed, static_cast<std::uint64_t>(function_id),
                            static_cast<std::uint64_t>(rep_id));

  const Eigen::MatrixXd K_train = kernels::gram(cfg.model_kernel, data.inputs);
  Eigen::MatrixXd Kxn(static_cast<Eigen::Index>(idx.size()),
                      static_cast<Eigen::Index>(grid.points.size()));
  for (Eigen::Index c = 0; c < Kxn.cols(); ++c)
    for (Eigen::Index i = 0; i < Kxn.rows(); ++i)
      Kxn(i, c) = kernels::eval(cfg.model_kernel,
                                data.inputs[static_cast<std::size_t>(i)],
                                grid.points[static_cast<std::size_t>(c)]);

  double eps_tilde = 0.0;
  if (cfg.bound_method == bounds::Method::RobustNominal ||
      cfg.bound_method == bounds::Method::RobustIndependent)
    eps_tilde = kernels::sup_distance(cfg.model_kernel, cfg.truth_kernel, grid);

  return evaluate_instance(cfg, eps_tilde, truth_vals, K_train, Kxn, data,
                           function_id, rep_id);
}

CoverageReport run_experiment(const ExperimentConfig& cfg, int jobs) {
  validate(cfg);
  const HarnessCache cache = build_cache(cfg);

  const long total = static_cast<long>(cfg.n_functions) * cfg.n_reps;
  CoverageReport report;
  report.config = cfg;
  report.eps_tilde = cache.eps_tilde;
  report.instances.resize(static_cast<std::size_t>(total));

  parallel_instances(total, jobs, [&](long i) {
    const int fid = static_cast<int>(i / cfg.n_reps);
    const int rid = static_cast<int>(i % cfg.n_reps);
    InstanceRecord& rec = report.instances[static_cast<std::size_t>(i)];
    try {
      rec = run_instance_cached(cfg, cache, fid, rid);
    } catch (const numerics::FactorizationFailure&) {
      rec.function_id = fid;
      rec.rep_id = rid;
      rec.factorization_failed = true;
    }
  });

  // Aggregate in (function_id, rep_id) order. Failed factorizations are
  // counted and excluded from the statistics.
  const std::size_t n_delta = cfg.deltas.size();
  const bool beta_based = cfg.bound_method == bounds::Method::Nominal ||
                          cfg.bound_method == bounds::Method::RobustNominal;
  std::vector<double> betas, widths;
  for (int fid = 0; fid < cfg.n_functions; ++fid) {
    for (std::size_t d = 0; d < n_delta; ++d) {
      FunctionDeltaCell cell;
      cell.function_id = fid;
      cell.delta = cfg.deltas[d];
      betas.clear();
      widths.clear();
      for (int rid = 0; rid < cfg.n_reps; ++rid) {
        const InstanceRecord& rec =
            report.instances[static_cast<std::size_t>(fid) * cfg.n_reps + rid];
        if (rec.factorization_failed) {
          if (d == 0) ++report.factorization_failures;
          continue;
        }
        ++cell.reps;
        cell.failures += rec.violated[d];
        if (beta_based) betas.push_back(rec.beta[d]);
        widths.push_back(rec.width_mean[d]);
      }
      const MeanSd wb = mean_sd(widths);
      cell.width_mean = wb.mean;
      cell.width_sd = wb.sd;
      if (beta_based) {
        const MeanSd bb = mean_sd(betas);
        cell.beta_mean = bb.mean;
        cell.beta_sd = bb.sd;
      }
      report.cells.push_back(cell);
    }
  }

  for (std::size_t d = 0; d < n_delta; ++d) {
    CoverageReport::Aggregate agg;
    agg.delta = cfg.deltas[d];
    betas.clear();
    widths.clear();
    for (const InstanceRecord& rec : report.instances) {
      if (rec.factorization_failed) continue;
      ++agg.reps;
      agg.failures += rec.violated[d];
      if (beta_based) betas.push_back(rec.beta[d]);
      widths.push_back(rec.width_mean[d]);
    }
    const MeanSd wb = mean_sd(widths);
    agg.width_mean = wb.mean;
    agg.width_sd = wb.sd;
    if (beta_based) {
      const MeanSd bb = mean_sd(betas);
      agg.beta_mean = bb.mean;
      agg.beta_sd = bb.sd;
    }
    report.aggregates.push_back(agg);
  }
  return report;
}

SweepReport run_sweep(const ExperimentConfig& cfg, int jobs) {
  validate(cfg);
  if (!cfg.sweep)
    throw std::invalid_argument("run_sweep: config has no sweep section");
  if (cfg.bound_method != bounds::Method::Nominal)
    throw std::invalid_argument("run_sweep: only the nominal tube is swept");
  if (cfg.deltas.size() != 1)
    throw std::invalid_argument("run_sweep: exactly one delta required");

  const HarnessCache cache = build_cache(cfg);
  const int n_scalings = cfg.sweep->n_scalings;
  const double low = cfg.sweep->low;
  const double delta = cfg.deltas[0];
  const long total = static_cast<long>(cfg.n_functions) * cfg.n_reps;

  // Per instance: the scaling grid runs from `low` to this instance's beta;
  // the top scaling is beta itself, exactly.
  struct SweepInstance {
    std::vector<unsigned char> violated;  // per scaling
    std::vector<double> scalings;
    bool failed = false;
  };
  std::vector<SweepInstance> inst(static_cast<std::size_t>(total));

  parallel_instances(total, jobs, [&](long i) {
    const int fid = static_cast<int>(i / cfg.n_reps);
    const int rid = static_cast<int>(i % cfg.n_reps);
    SweepInstance& si = inst[static_cast<std::size_t>(i)];
    std::vector<int> idx;
    Eigen::VectorXd y;
    draw_instance_data(cfg, cache.truth_vals[static_cast<std::size_t>(fid)],
                       fid, rid, idx, y);
    gpr::Dataset data;
    data.inputs.reserve(idx.size());
    for (int k : idx)
      data.inputs.push_back(cache.grid.points[static_cast<std::size_t>(k)]);
    data.targets = y;
    data.noise_sd = cfg.noise_sd;

    const Eigen::Index n = static_cast<Eigen::Index>(idx.size());
    const Eigen::Index q = static_cast<Eigen::Index>(cache.grid.points.size());
    Eigen::MatrixXd K_train(n, n), Kxn(n, q);
    for (Eigen::Index jj = 0; jj < n; ++jj)
      for (Eigen::Index ii = 0; ii < n; ++ii)
        K_train(ii, jj) = cache.K_grid(idx[static_cast<std::size_t>(ii)],
                                       idx[static_cast<std::size_t>(jj)]);
    for (Eigen::Index c = 0; c < q; ++c)
      for (Eigen::Index ii = 0; ii < n; ++ii)
        Kxn(ii, c) = cache.K_grid(idx[static_cast<std::size_t>(ii)], c);

    try {
      const gpr::GprPosterior post =
          gpr::fit_with_gram(cfg.model_kernel, cfg.lambda, data, K_train);
      const gpr::GridEvaluation ge = gpr::evaluate_columns(post, Kxn, false);
      const double logdet_value = numerics::logdet(
          numerics::cholesky(K_train, bounds::beta_shift(cfg.lambda, 0.0, n)));
      const double beta =
          bounds::beta_from_logdet(cfg.B, cfg.R, delta, logdet_value);
      const Eigen::ArrayXd abs_err =
          (cache.truth_vals[static_cast<std::size_t>(fid)] - ge.mean).array().abs();
      const Eigen::ArrayXd sigma = ge.variance.array().sqrt();
      si.violated.resize(static_cast<std::size_t>(n_scalings));
      si.scalings.resize(static_cast<std::size_t>(n_scalings));
      for (int s = 0; s < n_scalings; ++s) {
        // Top scaling is beta itself (not low + span), keeping the endpoint
        // bitwise identical to the plain coverage run.
        const double scale =
            s == n_scalings - 1
                ? beta
                : low + (beta - low) * static_cast<double>(s) /
                          static_cast<double>(n_scalings - 1);
        si.scalings[static_cast<std::size_t>(s)] = scale;
        si.violated[static_cast<std::size_t>(s)] =
            (abs_err > scale * sigma).any() ? 1 : 0;
      }
    } catch (const numerics::FactorizationFailure&) {
      si.failed = true;
    }
  });

  SweepReport report;
  report.config = cfg;
  report.reps = cfg.n_reps;
  report.scaling_mean.assign(static_cast<std::size_t>(n_scalings), 0.0);
  report.failures.assign(
      static_cast<std::size_t>(n_scalings),
      std::vector<long>(static_cast<std::size_t>(cfg.n_functions), 0));
  long ok_count = 0;
  for (long i = 0; i < total; ++i) {
    const SweepInstance& si = inst[static_cast<std::size_t>(i)];
    if (si.failed) {
      ++report.factorization_failures;
      continue;
    }
    ++ok_count;
    const int fid = static_cast<int>(i / cfg.n_reps);
    for (int s = 0; s < n_scalings; ++s) {
      report.scaling_mean[static_cast<std::size_t>(s)] +=
          si.scalings[static_cast<std::size_t>(s)];
      report.failures[static_cast<std::size_t>(s)][static_cast<std::size_t>(fid)] +=
          si.violated[static_cast<std::size_t>(s)];
    }
  }
  if (ok_count > 0)
    for (double& m : report.scaling_mean) m /= static_cast<double>(ok_count);
  return report;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace {

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

void finish_write(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

bool is_beta_based(const CoverageReport& report) {
  return report.config.bound_method == bounds::Method::Nominal ||
         report.config.bound_method == bounds::Method::RobustNominal;
}

const char* kSummaryHeader =
    "tag,delta,beta_mean,beta_sd,failures,reps,failure_rate,width_mean,"
    "width_sd\n";

void write_summary_rows(std::ofstream& out, const CoverageReport& report) {
  const bool has_beta = is_beta_based(report);
  for (const CoverageReport::Aggregate& agg : report.aggregates) {
    const double rate =
        agg.reps > 0
            ? static_cast<double>(agg.failures) / static_cast<double>(agg.reps)
            : 0.0;
    out << report.config.tag << ',' << format17(agg.delta) << ','
        << (has_beta ? format17(agg.beta_mean) : "") << ','
        << (has_beta ? format17(agg.beta_sd) : "") << ',' << agg.failures
        << ',' << agg.reps << ',' << format17(rate) << ','
        << format17(agg.width_mean) << ',' << format17(agg.width_sd) << '\n';
  }
}

}  // namespace

void write_betas_csv(const std::string& path, const CoverageReport& report) {
  if (!is_beta_based(report))
    throw std::invalid_argument("betas.csv: tube method has no scalar beta");
  std::ofstream out = open_for_write(path);
  out << "function_id,rep_id,delta,beta\n";
  for (const InstanceRecord& rec : report.instances) {
    if (rec.factorization_failed) continue;
    for (std::size_t d = 0; d < report.config.deltas.size(); ++d)
      out << rec.function_id << ',' << rec.rep_id << ','
          << format17(report.config.deltas[d]) << ',' << format17(rec.beta[d])
          << '\n';
  }
  finish_write(out, path);
}

void write_coverage_csv(const std::string& path, const CoverageReport& report) {
  std::ofstream out = open_for_write(path);
  out << "function_id,delta,failures,reps\n";
  for (const FunctionDeltaCell& cell : report.cells)
    out << cell.function_id << ',' << format17(cell.delta) << ','
        << cell.failures << ',' << cell.reps << '\n';
  finish_write(out, path);
}

void write_widths_csv(const std::string& path, const CoverageReport& report) {
  std::ofstream out = open_for_write(path);
  out << "function_id,rep_id,delta,width_mean,width_sd\n";
  for (const InstanceRecord& rec : report.instances) {
    if (rec.factorization_failed) continue;
    for (std::size_t d = 0; d < report.config.deltas.size(); ++d)
      out << rec.function_id << ',' << rec.rep_id << ','
          << format17(report.config.deltas[d]) << ','
          << format17(rec.width_mean[d]) << ',' << format17(rec.width_sd[d])
          << '\n';
  }
  finish_write(out, path);
}

void write_sweep_csv(const std::string& path, const SweepReport& report) {
  std::ofstream out = open_for_write(path);
  out << "scaling,function_id,failure_rate\n";
  for (std::size_t s = 0; s < report.scaling_mean.size(); ++s)
    for (int fid = 0; fid < report.config.n_functions; ++fid)
      out << format17(report.scaling_mean[s]) << ',' << fid << ','
          << format17(report.failure_rate(static_cast<int>(s), fid)) << '\n';
  finish_write(out, path);
}

void write_summary_csv(const std::string& path,
                       const std::vector<CoverageReport>& reports) {
  if (reports.empty())
    throw std::invalid_argument("write_summary_csv: no reports to aggregate");
  std::ofstream out = open_for_write(path);
  out << kSummaryHeader;
  for (const CoverageReport& report : reports) write_summary_rows(out, report);
  finish_write(out, path);
}

std::vector<std::string> write_report_outputs(const std::string& dir,
                                              const CoverageReport& report) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  const auto emit = [&](const std::string& name, auto&& writer) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    writer(path);
    paths.push_back(path);
  };
  if (is_beta_based(report))
    emit("betas.csv", [&](const std::string& p) { write_betas_csv(p, report); });
  emit("coverage.csv",
       [&](const std::string& p) { write_coverage_csv(p, report); });
  emit("widths.csv", [&](const std::string& p) { write_widths_csv(p, report); });
  emit("summary.csv", [&](const std::string& p) {
    std::ofstream out = open_for_write(p);
    out << kSummaryHeader;
    write_summary_rows(out, report);
    finish_write(out, p);
  });
  return paths;
}

}  // namespace gpb::experiments
