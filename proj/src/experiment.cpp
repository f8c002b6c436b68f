#include "plume/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "plume/io.hpp"
#include "plume/random.hpp"

namespace plume {

std::string to_string(EstimatorKind kind) { return kind == EstimatorKind::rbpf ? "rbpf" : "enkf"; }

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "rbpf") return EstimatorKind::rbpf;
  if (name == "enkf") return EstimatorKind::enkf;
  throw std::invalid_argument("unknown estimator '" + name + "' (expected rbpf or enkf)");
}

namespace {

TriMesh load_mesh(const ScenarioConfig& c) {
  if (!c.mesh_file.empty()) return read_mesh_file(c.mesh_file);
  return build_structured_mesh(c.domain, c.nx, c.ny);
}

FlowField load_flow(const ScenarioConfig& c) {
  switch (c.flow_kind) {
    case FlowKind::zero:
      return ZeroFlow{};
    case FlowKind::uniform:
      return UniformFlow{c.flow_velocity};
    case FlowKind::rotation:
      return RigidRotation{c.rotation_center, c.rotation_rate};
    case FlowKind::grid:
      return read_flow_file(c.flow_file);
  }
  return ZeroFlow{};
}

// Worst case over every flow snapshot: smallest critical step, largest
// Peclet number and artificial diffusivity.
StabilityReport worst_stability(const TriMesh& mesh, const FlowField& flow, double diffusivity, MassKind kind) {
  StabilityReport worst;
  for (std::size_t e = 0; e < epoch_count(flow); ++e) {
    const auto vel = element_velocities(flow, mesh, epoch_time(flow, e));
    auto r = stability_report(mesh, vel, diffusivity, kind);
    if (e == 0) {
      worst = std::move(r);
      continue;
    }
    worst.artificial_diffusivity = std::max(worst.artificial_diffusivity, r.artificial_diffusivity);
    if (r.max_peclet > worst.max_peclet) {
      worst.max_peclet = r.max_peclet;
      worst.peclet = r.peclet;
    }
    worst.courant_dt = std::min(worst.courant_dt, r.courant_dt);
    worst.diffusion_dt = std::min(worst.diffusion_dt, r.diffusion_dt);
    if (r.critical_dt < worst.critical_dt) {
      worst.critical_dt = r.critical_dt;
      worst.lambda_max = r.lambda_max;
    }
    worst.power_iteration_converged = worst.power_iteration_converged && r.power_iteration_converged;
    worst.power_iterations = std::max(worst.power_iterations, r.power_iterations);
  }
  return worst;
}

}  // namespace

double noise_free_peak(const TriMesh& mesh, const DynamicsSchedule& dynamics, double strength, std::size_t steps) {
  const auto n = static_cast<Eigen::Index>(mesh.node_count());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n + 1);
  x(n) = strength;
  double peak = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    x = dynamics.at_step(k).step(x);
    peak = std::max(peak, x.head(n).cwiseAbs().maxCoeff());
  }
  return peak;
}

Scenario::Scenario(const ScenarioConfig& config) : config_(config) {
  mesh_ = std::make_unique<TriMesh>(load_mesh(config_));
  flow_ = load_flow(config_);

  diffusivity_ = config_.diffusivity;
  stability_ = worst_stability(*mesh_, flow_, diffusivity_, config_.mass_kind);
  if (config_.artificial_diffusivity && stability_.artificial_diffusivity > 0.0) {
    diffusivity_ = apply_artificial_diffusivity(diffusivity_, stability_);
    stability_ = worst_stability(*mesh_, flow_, diffusivity_, config_.mass_kind);
  }

  dt_ = config_.dt > 0.0 ? config_.dt : stability_.recommended_dt();
  if (!std::isfinite(dt_) || dt_ <= 0.0) {
    throw ConfigError("cannot derive a time step (no flow and no diffusion); set model.dt");
  }
  if (!stability_.is_stable(dt_) && !config_.force) {
    throw ConfigError("time step " + format_double(dt_) + " s exceeds the stability limit " +
                      format_double(stability_.critical_dt) + " s (use --force to run anyway)");
  }

  DynamicsSchedule::Settings s;
  s.diffusivity = diffusivity_;
  s.dt = dt_;
  s.source = config_.source;
  s.mass_kind = config_.mass_kind;
  s.process_variance = config_.process_variance;
  s.strength_variance = config_.strength_variance;
  dynamics_ = std::make_unique<DynamicsSchedule>(*mesh_, flow_, s, config_.steps);

  std::vector<Sensor> sensors;
  if (!config_.sensor_file.empty()) {
    sensors = read_sensor_file(config_.sensor_file);
    if (sensors.empty()) throw ConfigError("sensor file " + config_.sensor_file + " lists no sensors");
  } else {
    double eta = config_.eta;
    if (eta <= 0.0) {
      // Span the noise-free field plus four measurement-noise deviations.
      eta = noise_free_peak(*mesh_, *dynamics_, config_.strength, config_.steps) +
            4.0 * std::sqrt(config_.noise_variance);
    }
    Rng rng = make_rng(config_.seed, {stream::sensors});
    for (const auto& p : random_sensor_positions(*mesh_, config_.sensor_count, rng)) {
      sensors.push_back({p, eta, config_.levels, config_.noise_variance, config_.detection_prob});
    }
  }
  sensors_ = std::make_unique<SensorNetwork>(*mesh_, std::move(sensors));
  hash_ = scenario_hash(config_);
}

GroundTruth simulate_ground_truth(const Scenario& scenario, std::uint64_t truth_seed) {
  const auto n = static_cast<Eigen::Index>(scenario.mesh().node_count());
  const std::size_t steps = scenario.steps();
  const double w_sd = std::sqrt(scenario.config().process_variance);

  GroundTruth truth;
  truth.states.reserve(steps + 1);
  truth.observations.reserve(steps);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n + 1);
  x(n) = scenario.config().strength;
  truth.states.push_back(x);

  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd noise = Eigen::VectorXd::Zero(n + 1);  // strength entry stays 0
  for (std::size_t k = 0; k < steps; ++k) {
    Rng process = make_rng(truth_seed, {stream::truth, k, 0});
    for (Eigen::Index i = 0; i < n; ++i) noise(i) = w_sd * gauss(process);
    x = scenario.dynamics().at_step(k).step(x, &noise);
    truth.states.push_back(x);
    Rng sensing = make_rng(truth_seed, {stream::truth, k, 1});
    truth.observations.push_back(observe(scenario.sensors(), {x.data(), static_cast<std::size_t>(x.size())}, sensing));
  }
  return truth;
}

std::vector<std::vector<double>> received_levels(const GroundTruth& truth) {
  std::vector<std::vector<double>> out;
  out.reserve(truth.observations.size());
  for (const auto& o : truth.observations) out.push_back(o.quantised);
  return out;
}

EstimatorSpec EstimatorSpec::from(const ScenarioConfig& c) {
  return {c.method, c.size, c.prior_variance, c.ess_threshold, c.inflation, c.threads};
}

EstimateTrace run_estimator(const Scenario& scenario, const std::vector<std::vector<double>>& observations,
                            const EstimatorSpec& spec, std::uint64_t filter_seed, const StepObserver& observer) {
  if (observations.size() != scenario.steps()) {
    throw std::invalid_argument("observation log has " + std::to_string(observations.size()) +
                                " steps, scenario expects " + std::to_string(scenario.steps()));
  }
  const auto start = std::chrono::steady_clock::now();
  EstimateTrace trace;
  trace.estimates.reserve(observations.size());

  auto check = [&](const std::vector<double>& levels) {
    if (levels.size() != scenario.sensors().size()) {
      throw std::invalid_argument("observation row has " + std::to_string(levels.size()) + " sensors, scenario has " +
                                  std::to_string(scenario.sensors().size()));
    }
  };

  if (spec.kind == EstimatorKind::rbpf) {
    RbpfConfig cfg;
    cfg.particles = spec.size;
    cfg.prior_variance = spec.prior_variance;
    cfg.ess_threshold = spec.ess_threshold;
    cfg.seed = filter_seed;
    cfg.threads = spec.threads;
    Rbpf filter(scenario.sensors(), scenario.state_dim(), cfg);
    for (std::size_t k = 0; k < observations.size(); ++k) {
      check(observations[k]);
      trace.estimates.push_back(filter.step(scenario.dynamics().at_step(k), observations[k]).state);
      if (observer) observer(k + 1, &filter);
    }
  } else {
    EnkfConfig cfg;
    cfg.members = spec.size;
    cfg.prior_variance = spec.prior_variance;
    cfg.inflation = spec.inflation;
    cfg.seed = filter_seed;
    cfg.threads = spec.threads;
    Enkf filter(scenario.sensors(), scenario.state_dim(), cfg);
    for (std::size_t k = 0; k < observations.size(); ++k) {
      check(observations[k]);
      trace.estimates.push_back(filter.step(scenario.dynamics().at_step(k), observations[k]).state);
      if (observer) observer(k + 1, nullptr);
    }
  }
  trace.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return trace;
}

double TrialResult::mean_error() const {
  if (error_norms.empty()) return 0.0;
  return std::accumulate(error_norms.begin(), error_norms.end(), 0.0) / static_cast<double>(error_norms.size());
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t trial) { return derive_seed(master, {trial}); }
std::uint64_t truth_seed(std::uint64_t trial_seed) { return derive_seed(trial_seed, {stream::truth}); }
std::uint64_t filter_seed(std::uint64_t trial_seed) { return derive_seed(trial_seed, {stream::filter}); }

TrialResult score_trial(const GroundTruth& truth, const EstimateTrace& trace, std::size_t trial, std::uint64_t seed) {
  if (truth.states.size() != trace.estimates.size() + 1) {
    throw std::invalid_argument("estimate trace and truth trajectory differ in length");
  }
  TrialResult r;
  r.trial = trial;
  r.seed = seed;
  r.seconds = trace.seconds;
  r.truth.assign(truth.states.begin() + 1, truth.states.end());
  r.estimates = trace.estimates;
  for (std::size_t k = 0; k < r.estimates.size(); ++k) {
    const auto& x = r.truth[k];
    const auto& e = r.estimates[k];
    r.error_norms.push_back((x - e).norm());
    r.strength_estimates.push_back(e(e.size() - 1));
    r.true_strengths.push_back(x(x.size() - 1));
  }
  return r;
}

TrialResult run_trial(const Scenario& scenario, const EstimatorSpec& spec, std::size_t trial) {
  const std::uint64_t seed = trial_seed(scenario.config().seed, trial);
  const GroundTruth truth = simulate_ground_truth(scenario, truth_seed(seed));
  const EstimateTrace trace = run_estimator(scenario, received_levels(truth), spec, filter_seed(seed));
  return score_trial(truth, trace, trial, seed);
}

double compute_aee(const std::vector<TrialResult>& results) {
  if (results.empty()) return 0.0;
  const std::size_t k = results.front().error_norms.size();
  for (const auto& r : results) {
    if (r.error_norms.size() != k) throw std::invalid_argument("trials have different horizons");
  }
  if (k == 0) return 0.0;
  double total = 0.0;
  for (const auto& r : results) total += std::accumulate(r.error_norms.begin(), r.error_norms.end(), 0.0);
  return total / static_cast<double>(k * results.size());
}

StepStatistics step_statistics(const std::vector<TrialResult>& results) {
  StepStatistics s;
  if (results.empty()) return s;
  const std::size_t k = results.front().error_norms.size();
  for (const auto& r : results) {
    if (r.error_norms.size() != k) throw std::invalid_argument("trials have different horizons");
  }
  s.mean.assign(k, 0.0);
  s.stddev.assign(k, 0.0);
  const double q = static_cast<double>(results.size());
  for (std::size_t i = 0; i < k; ++i) {
    double sum = 0.0;
    for (const auto& r : results) sum += r.error_norms[i];
    s.mean[i] = sum / q;
    double ss = 0.0;
    for (const auto& r : results) ss += (r.error_norms[i] - s.mean[i]) * (r.error_norms[i] - s.mean[i]);
    s.stddev[i] = results.size() > 1 ? std::sqrt(ss / (q - 1.0)) : 0.0;
  }
  return s;
}

}  // namespace plume
