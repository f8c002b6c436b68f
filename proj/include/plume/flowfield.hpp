#pragma once

#include <cstddef>
#include <variant>
#include <vector>

#include "plume/mesh.hpp"

namespace plume {

struct Velocity {
  double u = 0.0;
  double v = 0.0;

  double norm() const;
  friend bool operator==(const Velocity&, const Velocity&) = default;
};

struct ZeroFlow {};

struct UniformFlow {
  Velocity velocity;
};

/// Solid-body rotation v = omega x (p - center).
struct RigidRotation {
  Point2 center;
  double angular_rate = 0.0;
};

/// Regular grid of current samples. Arrays are indexed (time, y, x) in
/// row-major order; masked (land) samples carry no velocity.
struct GriddedFlow {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> ts;
  std::vector<double> u;
  std::vector<double> v;
  std::vector<bool> mask;  // true = land / missing

  std::size_t nx() const { return xs.size(); }
  std::size_t ny() const { return ys.size(); }
  std::size_t nt() const { return ts.size(); }
  std::size_t index(std::size_t it, std::size_t iy, std::size_t ix) const { return (it * ny() + iy) * nx() + ix; }

  /// Throws std::invalid_argument on inconsistent shapes or unsorted axes.
  void validate() const;
};

using FlowField = std::variant<ZeroFlow, UniformFlow, RigidRotation, GriddedFlow>;

/// Bilinear in space, piecewise linear in time. Masked corners contribute
/// zero velocity. Gridded queries outside the spatial box or time range throw
/// std::out_of_range; a grid with a single time sample is treated as steady.
Velocity velocity_at(const FlowField& flow, const Point2& p, double t);

/// Velocity sampled at every element centroid.
std::vector<Velocity> element_velocities(const FlowField& flow, const TriMesh& mesh, double t);

/// Index of the flow snapshot in effect at time t. Steady flows have a single
/// epoch 0; gridded flows change epoch at each sample time.
std::size_t flow_epoch(const FlowField& flow, double t);

/// Time at which the snapshot for `epoch` was recorded (0 for steady flows).
double epoch_time(const FlowField& flow, std::size_t epoch);

/// Number of distinct snapshots.
std::size_t epoch_count(const FlowField& flow);

}  // namespace plume
