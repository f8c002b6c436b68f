#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "plume/filters.hpp"
#include "plume/normal.hpp"

namespace plume {

double propose_latent(const Quantiser& q, double level, Rng& rng) {
  std::uniform_real_distribution<double> cell(level - q.half_width(), level + q.half_width());
  return cell(rng);
}

double log_particle_weight(const SensorNetwork& network, std::span<const double> levels,
                           std::span<const double> latent, std::span<const double> predicted,
                           std::span<const double> innovation_var, double jitter) {
  double acc = 0.0;
  for (std::size_t j = 0; j < network.size(); ++j) {
    const auto& s = network.sensor(j);
    const auto& q = network.quantiser(j);
    acc += log_observation_likelihood(q, levels[j], latent[j], s.noise_variance, s.detection_prob);
    acc += log_latent_transition_density(predicted[j], innovation_var[j], latent[j], jitter);
    acc -= std::log(q.proposal_density());
  }
  return acc;
}

std::vector<double> normalise_log_weights(std::span<const double> log_weights) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (!std::isnan(lw)) hi = std::max(hi, lw);
  }
  if (!std::isfinite(hi)) {
    throw FilterError("particle weights degenerate: no finite log-weight among " +
                      std::to_string(log_weights.size()) + " particles");
  }
  std::vector<double> w(log_weights.size());
  double sum = 0.0;
  for (std::size_t m = 0; m < w.size(); ++m) {
    w[m] = std::isnan(log_weights[m]) ? 0.0 : std::exp(log_weights[m] - hi);
    sum += w[m];
  }
  for (auto& v : w) v /= sum;
  return w;
}

std::vector<std::size_t> multinomial_resample(std::span<const double> weights, Rng& rng) {
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::vector<std::size_t> out(weights.size());
  for (auto& a : out) a = pick(rng);
  return out;
}

double effective_sample_size(std::span<const double> weights) {
  double sq = 0.0;
  for (double w : weights) sq += w * w;
  return sq > 0.0 ? 1.0 / sq : 0.0;
}

// ---------------------------------------------------------------------------

Rbpf::Rbpf(const SensorNetwork& network, std::size_t state_dim, const RbpfConfig& config)
    : Rbpf(network, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(state_dim)),
           config.prior_variance *
               Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(state_dim), static_cast<Eigen::Index>(state_dim)),
           config) {}

Rbpf::Rbpf(const SensorNetwork& network, const Eigen::VectorXd& initial_mean, const Eigen::MatrixXd& initial_cov,
           const RbpfConfig& config)
    : network_(network), config_(config), cov_(initial_cov) {
  if (config.particles == 0) throw FilterError("RBPF needs at least one particle");
  if (initial_mean.size() != static_cast<Eigen::Index>(network.state_dim())) {
    throw FilterError("initial mean does not match the sensor network's state dimension");
  }
  particles_.resize(config.particles);
  for (auto& p : particles_) {
    p.mean = initial_mean;
    p.latent = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(network.size()));
    p.log_weight = 0.0;
    p.weight = 1.0 / static_cast<double>(config.particles);
  }
}

FilterEstimate Rbpf::step(const DispersionModel& model, std::span<const double> levels) {
  const std::size_t n = model.state_dim();
  const std::size_t nsens = network_.size();
  if (levels.size() != nsens) throw FilterError("observation has wrong number of sensors");
  if (network_.state_dim() != n) throw FilterError("model and sensor network disagree on state dimension");
  ++step_;

  // Shared covariance recursion, once per step.
  predicted_cov_ = kf_predict(model, {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n)), cov_}).cov;
  const double jitter = innovation_jitter(predicted_cov_, config_.jitter_scale);
  CovarianceUpdate cu = kf_covariance_update(predicted_cov_, network_.measurement_matrix(), jitter);
  cov_ = std::move(cu.posterior);

  const auto h = network_.csr();
  const auto& k = cu.gain;
  const auto& innov_var = cu.innovation_var;
  const auto m_count = static_cast<std::ptrdiff_t>(particles_.size());
  weighted_ = particles_;

#pragma omp parallel for schedule(static) num_threads(std::max(1, config_.threads))
  for (std::ptrdiff_t m = 0; m < m_count; ++m) {
    auto& p = weighted_[static_cast<std::size_t>(m)];
    Rng rng = make_rng(config_.seed, {stream::filter, step_, static_cast<std::uint64_t>(m)});

    Eigen::VectorXd pred(static_cast<Eigen::Index>(n));
    model.apply({p.mean.data(), n}, {pred.data(), n});
    Eigen::VectorXd mu(static_cast<Eigen::Index>(nsens));
    simd::csr_matvec(h, {pred.data(), n}, {mu.data(), nsens});

    for (std::size_t j = 0; j < nsens; ++j) {
      p.latent(static_cast<Eigen::Index>(j)) = propose_latent(network_.quantiser(j), levels[j], rng);
    }
    p.log_weight += log_particle_weight(network_, levels, {p.latent.data(), nsens}, {mu.data(), nsens},
                                        {innov_var.data(), nsens}, jitter);

    Eigen::VectorXd innovation = p.latent - mu;
    simd::active().gemv_acc(n, nsens, k.data(), static_cast<std::size_t>(k.rows()), innovation.data(),
                            pred.data());
    p.mean = std::move(pred);
  }

  std::vector<double> logw(weighted_.size());
  for (std::size_t m = 0; m < weighted_.size(); ++m) logw[m] = weighted_[m].log_weight;
  std::vector<double> w;
  try {
    w = normalise_log_weights(logw);
  } catch (const FilterError& e) {
    throw FilterError(std::string(e.what()) + " at step " + std::to_string(step_));
  }

  FilterEstimate est{Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))};
  for (std::size_t m = 0; m < weighted_.size(); ++m) {
    weighted_[m].weight = w[m];
    simd::axpy(w[m], {weighted_[m].mean.data(), n}, {est.state.data(), n});
  }

  const double ess = effective_sample_size(w);
  resampled_ = config_.ess_threshold <= 0.0 || ess < config_.ess_threshold * static_cast<double>(w.size());
  if (resampled_) {
    Rng rng = make_rng(config_.seed, {stream::resample, step_});
    ancestors_ = multinomial_resample(w, rng);
    for (std::size_t m = 0; m < particles_.size(); ++m) {
      particles_[m] = weighted_[ancestors_[m]];
      particles_[m].log_weight = 0.0;
      particles_[m].weight = 1.0 / static_cast<double>(particles_.size());
    }
  } else {
    ancestors_.resize(particles_.size());
    std::iota(ancestors_.begin(), ancestors_.end(), std::size_t{0});
    for (std::size_t m = 0; m < particles_.size(); ++m) {
      particles_[m] = weighted_[m];
      particles_[m].log_weight = std::log(w[m]);
    }
  }
  return est;
}

}  // namespace plume
