#pragma once

#include <Eigen/Sparse>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "plume/fem.hpp"
#include "plume/mesh.hpp"

namespace plume {

class SensingError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Uniform quantiser on [-eta, eta] with `levels` cells of half-width
/// eta / levels. Level h sits at -eta + (2h + 1) eta / levels.
class Quantiser {
 public:
  Quantiser(double eta, std::int64_t levels);

  double scale() const { return eta_; }
  std::int64_t level_count() const { return levels_; }
  double half_width() const { return eta_ / static_cast<double>(levels_); }
  double cell_width() const { return 2.0 * half_width(); }

  double level(std::int64_t h) const;
  /// Cell index of y; values outside [-eta, eta] saturate to the end cells
  /// and y == eta maps to the top cell.
  std::int64_t cell_index(double y) const;
  double quantise(double y) const { return level(cell_index(y)); }
  /// True when y is (to rounding) one of the levels.
  bool is_level(double y) const;

  /// Uniform proposal density over one cell, levels / (2 eta).
  double proposal_density() const { return 1.0 / cell_width(); }

 private:
  double eta_;
  std::int64_t levels_;
};

/// Probability that N(mean, variance) falls in the quantiser cell of `level`.
double cell_probability(const Quantiser& q, double level, double mean, double variance);
double log_cell_probability(const Quantiser& q, double level, double mean, double variance);

/// Two-component mixture over detection (alpha = 1, centred at z) and miss
/// (alpha = 0, centred at 0).
double observation_likelihood(const Quantiser& q, double level, double latent, double noise_variance,
                              double detection_prob);
double log_observation_likelihood(const Quantiser& q, double level, double latent, double noise_variance,
                                  double detection_prob);

/// y = alpha * (H c) + v. Noise is present even when the signal is missed.
inline double simulate_measurement(double signal, bool detected, double noise) {
  return (detected ? signal : 0.0) + noise;
}

struct Sensor {
  Point2 position;
  double eta = 1.0;
  std::int64_t levels = 2;
  double noise_variance = 1.0;
  /// Probability that the signal component is present (alpha-bar).
  double detection_prob = 1.0;
};

/// Static sensors with their measurement operator. Row j of H holds the
/// shape-function values of the element containing sensor j; the strength
/// column is zero.
class SensorNetwork {
 public:
  SensorNetwork(const TriMesh& mesh, std::vector<Sensor> sensors);

  std::size_t size() const { return sensors_.size(); }
  const std::vector<Sensor>& sensors() const { return sensors_; }
  const Sensor& sensor(std::size_t j) const { return sensors_.at(j); }
  const Quantiser& quantiser(std::size_t j) const { return quantisers_.at(j); }
  const SparseRowMatrix& measurement_matrix() const { return h_; }
  simd::CsrView csr() const;
  std::size_t state_dim() const { return static_cast<std::size_t>(h_.cols()); }

 private:
  std::vector<Sensor> sensors_;
  std::vector<Quantiser> quantisers_;
  SparseRowMatrix h_;
};

/// N x (C + 1) measurement matrix. Throws SensingError for a sensor outside
/// the mesh.
SparseRowMatrix build_measurement_matrix(const TriMesh& mesh, std::span<const Point2> positions);

/// Uniform positions over the mesh bounding box, rejecting points outside the
/// mesh.
std::vector<Point2> random_sensor_positions(const TriMesh& mesh, std::size_t count, std::mt19937_64& rng);

struct QuantisedObservation {
  std::vector<double> quantised;  // what the filter receives
  // Simulation-only ground truth.
  std::vector<bool> detected;
  std::vector<double> raw;
};

/// Draw detection flags and noise for every sensor and quantise.
QuantisedObservation observe(const SensorNetwork& network, std::span<const double> state, std::mt19937_64& rng);

}  // namespace plume
