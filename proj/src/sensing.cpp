#include "plume/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "plume/normal.hpp"

namespace plume {

Quantiser::Quantiser(double eta, std::int64_t levels) : eta_(eta), levels_(levels) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw SensingError("quantiser scale must be positive");
  if (levels < 1) throw SensingError("quantiser needs at least one level");
}

double Quantiser::level(std::int64_t h) const {
  return -eta_ + static_cast<double>(2 * h + 1) * eta_ / static_cast<double>(levels_);
}

std::int64_t Quantiser::cell_index(double y) const {
  if (std::isnan(y)) throw SensingError("cannot quantise NaN");
  if (y <= -eta_) return 0;
  if (y >= eta_) return levels_ - 1;
  auto h = static_cast<std::int64_t>(std::floor((y + eta_) / cell_width()));
  h = std::clamp<std::int64_t>(h, 0, levels_ - 1);
  // Guard the division against rounding at cell edges.
  const double w = half_width();
  if (h > 0 && y < level(h) - w) --h;
  if (h < levels_ - 1 && y >= level(h) + w) ++h;
  return h;
}

bool Quantiser::is_level(double y) const {
  if (!std::isfinite(y)) return false;
  const double pos = (y + eta_) / cell_width() - 0.5;
  const double h = std::round(pos);
  if (h < 0 || h > static_cast<double>(levels_ - 1)) return false;
  return std::abs(level(static_cast<std::int64_t>(h)) - y) <= 1e-9 * cell_width() + 1e-12 * eta_;
}

double log_cell_probability(const Quantiser& q, double level, double mean, double variance) {
  if (!(variance > 0.0)) throw SensingError("cell probability needs a positive variance");
  const double sd = std::sqrt(variance);
  const double w = q.half_width();
  return normal::log_cdf_diff((level - w - mean) / sd, (level + w - mean) / sd);
}

double cell_probability(const Quantiser& q, double level, double mean, double variance) {
  return std::exp(log_cell_probability(q, level, mean, variance));
}

double log_observation_likelihood(const Quantiser& q, double level, double latent, double noise_variance,
                                  double detection_prob) {
  if (detection_prob < 0.0 || detection_prob > 1.0) throw SensingError("detection probability outside [0, 1]");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const double hit = detection_prob > 0.0
                         ? std::log(detection_prob) + log_cell_probability(q, level, latent, noise_variance)
                         : kNegInf;
  const double miss = detection_prob < 1.0
                          ? std::log1p(-detection_prob) + log_cell_probability(q, level, 0.0, noise_variance)
                          : kNegInf;
  return normal::log_add(hit, miss);
}

double observation_likelihood(const Quantiser& q, double level, double latent, double noise_variance,
                              double detection_prob) {
  return std::exp(log_observation_likelihood(q, level, latent, noise_variance, detection_prob));
}

// ---------------------------------------------------------------------------

SparseRowMatrix build_measurement_matrix(const TriMesh& mesh, std::span<const Point2> positions) {
  const auto n = static_cast<Eigen::Index>(positions.size());
  const auto dim = static_cast<Eigen::Index>(mesh.node_count() + 1);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(positions.size() * 3);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& p = positions[static_cast<std::size_t>(j)];
    const auto e = mesh.locate_point(p);
    if (!e) {
      throw SensingError("sensor " + std::to_string(j) + " at (" + std::to_string(p.x) + ", " +
                         std::to_string(p.y) + ") lies outside the mesh");
    }
    const auto b = mesh.shape_functions_at(*e, p).shape_values;
    const auto& tri = mesh.elements()[*e];
    for (int i = 0; i < 3; ++i) {
      if (b[i] != 0.0) t.emplace_back(j, static_cast<Eigen::Index>(tri[i]), b[i]);
    }
  }
  SparseRowMatrix h(n, dim);
  h.setFromTriplets(t.begin(), t.end());
  h.makeCompressed();
  return h;
}

SensorNetwork::SensorNetwork(const TriMesh& mesh, std::vector<Sensor> sensors) : sensors_(std::move(sensors)) {
  std::vector<Point2> positions;
  positions.reserve(sensors_.size());
  quantisers_.reserve(sensors_.size());
  for (std::size_t j = 0; j < sensors_.size(); ++j) {
    const auto& s = sensors_[j];
    if (!(s.noise_variance > 0.0)) throw SensingError("sensor " + std::to_string(j) + ": noise variance must be > 0");
    if (s.detection_prob < 0.0 || s.detection_prob > 1.0) {
      throw SensingError("sensor " + std::to_string(j) + ": detection probability outside [0, 1]");
    }
    quantisers_.emplace_back(s.eta, s.levels);
    positions.push_back(s.position);
  }
  h_ = build_measurement_matrix(mesh, positions);
}

simd::CsrView SensorNetwork::csr() const {
  return {static_cast<std::size_t>(h_.rows()), static_cast<std::size_t>(h_.cols()), h_.outerIndexPtr(),
          h_.innerIndexPtr(), h_.valuePtr()};
}

std::vector<Point2> random_sensor_positions(const TriMesh& mesh, std::size_t count, std::mt19937_64& rng) {
  const auto& box = mesh.bounding_box();
  std::uniform_real_distribution<double> ux(box.x0, box.x1);
  std::uniform_real_distribution<double> uy(box.y0, box.y1);
  std::vector<Point2> out;
  out.reserve(count);
  std::size_t attempts = 0;
  while (out.size() < count) {
    if (++attempts > 1000 * (count + 1)) throw SensingError("could not place sensors inside the mesh");
    const Point2 p{ux(rng), uy(rng)};
    if (mesh.locate_point(p)) out.push_back(p);
  }
  return out;
}

QuantisedObservation observe(const SensorNetwork& network, std::span<const double> state, std::mt19937_64& rng) {
  const std::size_t n = network.size();
  std::vector<double> signal(n);
  simd::csr_matvec(network.csr(), state, signal);

  QuantisedObservation obs;
  obs.quantised.resize(n);
  obs.detected.resize(n);
  obs.raw.resize(n);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& s = network.sensor(j);
    std::bernoulli_distribution detect(s.detection_prob);
    const bool hit = detect(rng);
    const double noise = std::sqrt(s.noise_variance) * gauss(rng);
    obs.detected[j] = hit;
    obs.raw[j] = simulate_measurement(signal[j], hit, noise);
    obs.quantised[j] = network.quantiser(j).quantise(obs.raw[j]);
  }
  return obs;
}

}  // namespace plume
