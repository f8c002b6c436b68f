#include "plume/flowfield.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace plume {

double Velocity::norm() const { return std::hypot(u, v); }

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_ascending(const std::vector<double>& axis, const char* name) {
  if (axis.empty()) throw std::invalid_argument(std::string("gridded flow axis '") + name + "' is empty");
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (!(axis[i] > axis[i - 1])) {
      throw std::invalid_argument(std::string("gridded flow axis '") + name + "' is not strictly increasing");
    }
  }
}

// Interval search on an ascending axis. Returns the lower index and the
// fractional position; single-sample axes collapse to (0, 0).
std::pair<std::size_t, double> bracket(const std::vector<double>& axis, double q, const char* name) {
  if (axis.size() == 1) {
    if (q != axis.front() && std::string(name) != "t") {
      throw std::out_of_range(std::string("query outside single-sample flow axis '") + name + "'");
    }
    return {0, 0.0};
  }
  if (q < axis.front() || q > axis.back()) {
    throw std::out_of_range(std::string("flow query ") + name + "=" + std::to_string(q) + " outside [" +
                            std::to_string(axis.front()) + ", " + std::to_string(axis.back()) + "]");
  }
  auto it = std::upper_bound(axis.begin(), axis.end(), q);
  std::size_t hi = static_cast<std::size_t>(it - axis.begin());
  if (hi >= axis.size()) hi = axis.size() - 1;
  const std::size_t lo = hi - 1;
  return {lo, (q - axis[lo]) / (axis[hi] - axis[lo])};
}

Velocity sample_snapshot(const GriddedFlow& g, std::size_t it, const Point2& p) {
  const auto [ix, fx] = bracket(g.xs, p.x, "x");
  const auto [iy, fy] = bracket(g.ys, p.y, "y");
  const std::size_t ix1 = g.nx() > 1 ? ix + 1 : ix;
  const std::size_t iy1 = g.ny() > 1 ? iy + 1 : iy;

  Velocity out;
  auto accumulate = [&](std::size_t jy, std::size_t jx, double w) {
    const auto k = g.index(it, jy, jx);
    if (w == 0.0 || g.mask[k]) return;
    out.u += w * g.u[k];
    out.v += w * g.v[k];
  };
  accumulate(iy, ix, (1 - fx) * (1 - fy));
  accumulate(iy, ix1, fx * (1 - fy));
  accumulate(iy1, ix, (1 - fx) * fy);
  accumulate(iy1, ix1, fx * fy);
  return out;
}

Velocity gridded_velocity(const GriddedFlow& g, const Point2& p, double t) {
  if (g.nt() == 1) return sample_snapshot(g, 0, p);
  const auto [it, ft] = bracket(g.ts, t, "t");
  const Velocity a = sample_snapshot(g, it, p);
  if (ft == 0.0) return a;
  const Velocity b = sample_snapshot(g, it + 1, p);
  return {(1 - ft) * a.u + ft * b.u, (1 - ft) * a.v + ft * b.v};
}

}  // namespace

void GriddedFlow::validate() const {
  check_ascending(xs, "x");
  check_ascending(ys, "y");
  check_ascending(ts, "t");
  const std::size_t n = nx() * ny() * nt();
  if (u.size() != n || v.size() != n || mask.size() != n) {
    throw std::invalid_argument("gridded flow sample arrays do not match grid shape " + std::to_string(nt()) + "x" +
                                std::to_string(ny()) + "x" + std::to_string(nx()));
  }
}

Velocity velocity_at(const FlowField& flow, const Point2& p, double t) {
  return std::visit(overloaded{
                        [](const ZeroFlow&) { return Velocity{}; },
                        [](const UniformFlow& f) { return f.velocity; },
                        [&](const RigidRotation& f) {
                          return Velocity{-f.angular_rate * (p.y - f.center.y), f.angular_rate * (p.x - f.center.x)};
                        },
                        [&](const GriddedFlow& g) { return gridded_velocity(g, p, t); },
                    },
                    flow);
}

std::vector<Velocity> element_velocities(const FlowField& flow, const TriMesh& mesh, double t) {
  std::vector<Velocity> out;
  out.reserve(mesh.element_count());
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    out.push_back(velocity_at(flow, mesh.element_geometry(e).centroid(), t));
  }
  return out;
}

std::size_t flow_epoch(const FlowField& flow, double t) {
  const auto* g = std::get_if<GriddedFlow>(&flow);
  if (!g || g->nt() == 1) return 0;
  if (t < g->ts.front() || t > g->ts.back()) {
    throw std::out_of_range("time " + std::to_string(t) + " outside gridded flow record");
  }
  auto it = std::upper_bound(g->ts.begin(), g->ts.end(), t);
  return static_cast<std::size_t>(it - g->ts.begin()) - 1;
}

double epoch_time(const FlowField& flow, std::size_t epoch) {
  const auto* g = std::get_if<GriddedFlow>(&flow);
  if (!g) return 0.0;
  if (epoch >= g->nt()) throw std::out_of_range("flow epoch out of range");
  return g->ts[epoch];
}

std::size_t epoch_count(const FlowField& flow) {
  const auto* g = std::get_if<GriddedFlow>(&flow);
  return g ? g->nt() : 1;
}

}  // namespace plume
