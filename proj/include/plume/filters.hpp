#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "plume/fem.hpp"
#include "plume/random.hpp"
#include "plume/sensing.hpp"

namespace plume {

class FilterError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Kalman recursion on the augmented state
// ---------------------------------------------------------------------------

struct GaussianBelief {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// mean' = Abar mean, P' = Abar P Abar^T + Wbar.
GaussianBelief kf_predict(const DispersionModel& model, const GaussianBelief& belief);

/// Covariance-only part of the update: gain and posterior covariance for a
/// noise-free linear observation z = H x, regularised by jitter * I on the
/// innovation covariance.
struct CovarianceUpdate {
  Eigen::MatrixXd gain;        // K, n x N (column-major)
  Eigen::MatrixXd posterior;   // (I - K H) P, symmetrised
  Eigen::VectorXd innovation_var;  // diag(H P H^T), without jitter
};

CovarianceUpdate kf_covariance_update(const Eigen::MatrixXd& predicted_cov, const SparseRowMatrix& h,
                                      double jitter);

GaussianBelief kf_update(const GaussianBelief& belief, const SparseRowMatrix& h, const Eigen::VectorXd& z,
                         double jitter);

/// jitter_scale * trace(P) / dim.
double innovation_jitter(const Eigen::MatrixXd& cov, double jitter_scale = 1e-9);

/// Density of latent sample z_j under N(predicted, innovation_var + jitter).
double latent_transition_density(double predicted, double innovation_var, double z, double jitter = 0.0);
double log_latent_transition_density(double predicted, double innovation_var, double z, double jitter = 0.0);

// ---------------------------------------------------------------------------
// Particle machinery
// ---------------------------------------------------------------------------

/// Uniform draw over the quantiser cell around `level`.
double propose_latent(const Quantiser& q, double level, Rng& rng);

/// Unnormalised log weight for one particle: sum over sensors of
/// log p(yhat | z) + log p(z | past) - log q(z).
double log_particle_weight(const SensorNetwork& network, std::span<const double> levels,
                           std::span<const double> latent, std::span<const double> predicted,
                           std::span<const double> innovation_var, double jitter);

/// Max-shifted normalisation. Throws FilterError when no weight is finite.
std::vector<double> normalise_log_weights(std::span<const double> log_weights);

/// M i.i.d. categorical draws (inverse CDF on sorted uniforms).
std::vector<std::size_t> multinomial_resample(std::span<const double> weights, Rng& rng);

double effective_sample_size(std::span<const double> weights);

// ---------------------------------------------------------------------------
// Rao-Blackwellised particle filter
// ---------------------------------------------------------------------------

struct Particle {
  Eigen::VectorXd latent;  // z, one entry per sensor
  Eigen::VectorXd mean;    // conditional Kalman mean x_{k|k}
  double log_weight = 0.0;
  double weight = 0.0;     // normalised, before resampling
};

struct RbpfConfig {
  std::size_t particles = 30;
  double prior_variance = 10.0;
  double jitter_scale = 1e-9;
  /// Resample when ESS < threshold * M. 0 means always resample.
  double ess_threshold = 0.0;
  std::uint64_t seed = 0;
  int threads = 1;
};

struct FilterEstimate {
  Eigen::VectorXd state;
  double strength() const { return state(state.size() - 1); }
};

class Rbpf {
 public:
  Rbpf(const SensorNetwork& network, std::size_t state_dim, const RbpfConfig& config);
  Rbpf(const SensorNetwork& network, const Eigen::VectorXd& initial_mean, const Eigen::MatrixXd& initial_cov,
       const RbpfConfig& config);

  /// One filter step for the transition k-1 -> k followed by assimilation of
  /// the quantised observation at k.
  FilterEstimate step(const DispersionModel& model, std::span<const double> levels);

  /// Particles as of the last step, before resampling.
  const std::vector<Particle>& particles() const { return weighted_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }
  const Eigen::MatrixXd& predicted_covariance() const { return predicted_cov_; }
  const std::vector<std::size_t>& ancestors() const { return ancestors_; }
  std::size_t steps_taken() const { return step_; }
  bool resampled_last_step() const { return resampled_; }

 private:
  const SensorNetwork& network_;
  RbpfConfig config_;
  std::vector<Particle> particles_;  // carried to the next step
  std::vector<Particle> weighted_;
  std::vector<std::size_t> ancestors_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd predicted_cov_;
  std::size_t step_ = 0;
  bool resampled_ = false;
};

// ---------------------------------------------------------------------------
// Stochastic ensemble Kalman filter (perturbed observations)
// ---------------------------------------------------------------------------

struct EnkfConfig {
  std::size_t members = 30;
  double prior_variance = 10.0;
  /// Multiplicative anomaly inflation applied after the forecast; 1 = none.
  double inflation = 1.0;
  std::uint64_t seed = 0;
  int threads = 1;
};

class Enkf {
 public:
  Enkf(const SensorNetwork& network, std::size_t state_dim, const EnkfConfig& config);
  Enkf(const SensorNetwork& network, std::vector<Eigen::VectorXd> members, const EnkfConfig& config);

  FilterEstimate step(const DispersionModel& model, std::span<const double> levels);

  const std::vector<Eigen::VectorXd>& members() const { return members_; }
  /// Effective observation variance per sensor: V + (eta/zeta)^2 / 3.
  const Eigen::VectorXd& effective_noise() const { return r_eff_; }
  std::size_t collapse_warnings() const { return collapse_warnings_; }

 private:
  const SensorNetwork& network_;
  EnkfConfig config_;
  std::vector<Eigen::VectorXd> members_;
  Eigen::VectorXd r_eff_;
  std::size_t step_ = 0;
  std::size_t collapse_warnings_ = 0;
};

}  // namespace plume
