#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "plume/fem.hpp"
#include "plume/filters.hpp"
#include "plume/flowfield.hpp"
#include "plume/mesh.hpp"
#include "plume/sensing.hpp"

namespace plume {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class FlowKind { zero, uniform, rotation, grid };
enum class EstimatorKind { rbpf, enkf };

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator(const std::string& name);

struct ScenarioConfig {
  // mesh
  std::string mesh_file;  // empty: structured
  Rect domain{0.0, 0.0, 1000.0, 1000.0};
  std::size_t nx = 20;
  std::size_t ny = 20;

  // flow
  FlowKind flow_kind = FlowKind::uniform;
  Velocity flow_velocity{0.02, 0.0};
  Point2 rotation_center;
  double rotation_rate = 0.0;
  std::string flow_file;

  // dynamics
  double diffusivity = 1.12e-8;
  bool artificial_diffusivity = true;
  double dt = 0.0;  // 0: recommended step from the stability report
  std::size_t steps = 48;
  MassKind mass_kind = MassKind::lumped;
  double process_variance = 5e-3;
  double strength_variance = 5e-3;
  bool force = false;  // accept a time step above the stability limit

  // source
  Point2 source{300.0, 500.0};
  double strength = 1.0;

  // sensors
  std::string sensor_file;  // empty: random layout
  std::size_t sensor_count = 40;
  double detection_prob = 0.85;
  double eta = 0.0;  // 0: span the noise-free field range
  std::int64_t levels = 10000;
  double noise_variance = 5e-3;

  // estimator
  EstimatorKind method = EstimatorKind::rbpf;
  std::size_t size = 30;
  std::size_t trials = 20;
  double prior_variance = 10.0;
  double ess_threshold = 0.0;
  double inflation = 1.0;
  int threads = 1;

  std::uint64_t seed = 1;
  std::size_t truth_stride = 1;
};

/// Hex SHA-256 over every setting that shapes the ground truth and the
/// observations (mesh, flow, dynamics, source, sensors, seed). Estimator
/// settings are excluded so one observation log can feed several estimators.
std::string scenario_hash(const ScenarioConfig& config);

/// Everything derived from a ScenarioConfig that stays fixed across trials.
class Scenario {
 public:
  explicit Scenario(const ScenarioConfig& config);

  const ScenarioConfig& config() const { return config_; }
  const TriMesh& mesh() const { return *mesh_; }
  const FlowField& flow() const { return flow_; }
  const SensorNetwork& sensors() const { return *sensors_; }
  const DynamicsSchedule& dynamics() const { return *dynamics_; }
  const StabilityReport& stability() const { return stability_; }
  double diffusivity() const { return diffusivity_; }
  double dt() const { return dt_; }
  std::size_t steps() const { return config_.steps; }
  std::size_t state_dim() const { return mesh_->node_count() + 1; }
  const std::string& hash() const { return hash_; }

 private:
  ScenarioConfig config_;
  std::unique_ptr<TriMesh> mesh_;
  FlowField flow_;
  StabilityReport stability_;
  double diffusivity_ = 0;
  double dt_ = 0;
  std::unique_ptr<DynamicsSchedule> dynamics_;
  std::unique_ptr<SensorNetwork> sensors_;
  std::string hash_;
};

struct GroundTruth {
  std::vector<Eigen::VectorXd> states;             // x_0 .. x_K
  std::vector<QuantisedObservation> observations;  // for steps 1 .. K
};

/// Noise-free field growth at constant strength; used to size the quantiser.
double noise_free_peak(const TriMesh& mesh, const DynamicsSchedule& dynamics, double strength, std::size_t steps);

/// Seeded truth: constant strength (no random walk), W-distributed field
/// noise, fresh detection and measurement-noise draws per step.
GroundTruth simulate_ground_truth(const Scenario& scenario, std::uint64_t truth_seed);

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::rbpf;
  std::size_t size = 30;
  double prior_variance = 10.0;
  double ess_threshold = 0.0;
  double inflation = 1.0;
  int threads = 1;

  static EstimatorSpec from(const ScenarioConfig& config);
};

/// Optional per-step hook for debug dumps; receives the RBPF after each step
/// (nullptr for the EnKF).
using StepObserver = std::function<void(std::size_t step, const Rbpf* rbpf)>;

struct EstimateTrace {
  std::vector<Eigen::VectorXd> estimates;  // for steps 1 .. K
  double seconds = 0.0;
};

EstimateTrace run_estimator(const Scenario& scenario, const std::vector<std::vector<double>>& observations,
                            const EstimatorSpec& spec, std::uint64_t filter_seed,
                            const StepObserver& observer = {});

struct TrialResult {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::vector<Eigen::VectorXd> truth;      // steps 1 .. K
  std::vector<Eigen::VectorXd> estimates;  // steps 1 .. K
  std::vector<double> error_norms;
  std::vector<double> strength_estimates;
  std::vector<double> true_strengths;
  double seconds = 0.0;

  double mean_error() const;
};

std::uint64_t trial_seed(std::uint64_t master, std::size_t trial);
std::uint64_t truth_seed(std::uint64_t trial_seed);
std::uint64_t filter_seed(std::uint64_t trial_seed);

/// Simulate, estimate and score one trial.
TrialResult run_trial(const Scenario& scenario, const EstimatorSpec& spec, std::size_t trial);

/// Score a trace against a truth trajectory.
TrialResult score_trial(const GroundTruth& truth, const EstimateTrace& trace, std::size_t trial, std::uint64_t seed);

/// Trial- and time-averaged Euclidean error of the augmented state. Trials
/// must share the horizon; an empty horizon yields 0.
double compute_aee(const std::vector<TrialResult>& results);

/// Per-step mean and standard deviation of the error norm across trials.
struct StepStatistics {
  std::vector<double> mean;
  std::vector<double> stddev;
};
StepStatistics step_statistics(const std::vector<TrialResult>& results);

std::vector<std::vector<double>> received_levels(const GroundTruth& truth);

}  // namespace plume
