#include <Eigen/Cholesky>
#include <cmath>

#include "plume/filters.hpp"

namespace plume {

namespace {

std::vector<Eigen::VectorXd> sample_prior(std::size_t dim, std::size_t count, double variance, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> out(count);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sd = std::sqrt(variance);
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = make_rng(seed, {stream::prior, i});
    out[i].resize(static_cast<Eigen::Index>(dim));
    for (auto& v : out[i]) v = sd * gauss(rng);
  }
  return out;
}

}  // namespace

Enkf::Enkf(const SensorNetwork& network, std::size_t state_dim, const EnkfConfig& config)
    : Enkf(network, sample_prior(state_dim, config.members, config.prior_variance, config.seed), config) {}

Enkf::Enkf(const SensorNetwork& network, std::vector<Eigen::VectorXd> members, const EnkfConfig& config)
    : network_(network), config_(config), members_(std::move(members)) {
  if (members_.size() < 2) throw FilterError("EnKF needs at least two ensemble members");
  for (const auto& m : members_) {
    if (m.size() != static_cast<Eigen::Index>(network.state_dim())) {
      throw FilterError("ensemble member does not match the sensor network's state dimension");
    }
  }
  r_eff_.resize(static_cast<Eigen::Index>(network.size()));
  for (std::size_t j = 0; j < network.size(); ++j) {
    const double hw = network.quantiser(j).half_width();
    r_eff_(static_cast<Eigen::Index>(j)) = network.sensor(j).noise_variance + hw * hw / 3.0;
  }
}

FilterEstimate Enkf::step(const DispersionModel& model, std::span<const double> levels) {
  const auto n = static_cast<Eigen::Index>(model.state_dim());
  const auto nsens = static_cast<Eigen::Index>(network_.size());
  const auto me = static_cast<Eigen::Index>(members_.size());
  if (static_cast<Eigen::Index>(levels.size()) != nsens) throw FilterError("observation has wrong number of sensors");
  ++step_;

  // Forecast with sampled process noise; perturbed observations come from the
  // same per-member stream.
  const Eigen::VectorXd noise_sd = model.process_variance().cwiseSqrt();
  const Eigen::VectorXd obs_sd = r_eff_.cwiseSqrt();
  Eigen::MatrixXd x(n, me);
  Eigen::MatrixXd perturbation(nsens, me);

#pragma omp parallel for schedule(static) num_threads(std::max(1, config_.threads))
  for (Eigen::Index i = 0; i < me; ++i) {
    Rng rng = make_rng(config_.seed, {stream::filter, step_, static_cast<std::uint64_t>(i)});
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd next(n);
    model.apply({members_[static_cast<std::size_t>(i)].data(), static_cast<std::size_t>(n)},
                {next.data(), static_cast<std::size_t>(n)});
    for (Eigen::Index r = 0; r < n; ++r) next(r) += noise_sd(r) * gauss(rng);
    x.col(i) = next;
    for (Eigen::Index j = 0; j < nsens; ++j) perturbation(j, i) = obs_sd(j) * gauss(rng);
  }

  Eigen::VectorXd mean = x.rowwise().mean();
  Eigen::MatrixXd anomalies = x.colwise() - mean;
  if (config_.inflation != 1.0) {
    anomalies *= config_.inflation;
    x = anomalies.colwise() + mean;
  }
  const double spread = anomalies.squaredNorm() / static_cast<double>(me - 1);
  if (spread < 1e-12 * static_cast<double>(n)) ++collapse_warnings_;

  const auto& h = network_.measurement_matrix();
  const Eigen::MatrixXd y = h * x;
  const Eigen::VectorXd ymean = y.rowwise().mean();
  const Eigen::MatrixXd ya = y.colwise() - ymean;
  const double denom = static_cast<double>(me - 1);
  Eigen::MatrixXd pyy = ya * ya.transpose() / denom;
  pyy.diagonal() += r_eff_;
  const Eigen::MatrixXd pxy = anomalies * ya.transpose() / denom;

  Eigen::Map<const Eigen::VectorXd> obs(levels.data(), nsens);
  Eigen::MatrixXd innovations = (perturbation.colwise() + obs) - y;
  Eigen::LLT<Eigen::MatrixXd> llt(pyy);
  if (llt.info() != Eigen::Success) throw FilterError("EnKF innovation covariance is not positive definite");
  x += pxy * llt.solve(innovations);

  FilterEstimate est{x.rowwise().mean()};
  for (Eigen::Index i = 0; i < me; ++i) members_[static_cast<std::size_t>(i)] = x.col(i);
  return est;
}

}  // namespace plume
