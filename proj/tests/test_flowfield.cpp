#include <doctest.h>

#include <cmath>

#include "plume/flowfield.hpp"

using namespace plume;
using doctest::Approx;

namespace {

GriddedFlow linear_grid(std::size_t nt) {
  GriddedFlow f;
  f.xs = {0, 0.5, 1};
  f.ys = {0, 1};
  for (std::size_t t = 0; t < nt; ++t) f.ts.push_back(3600.0 * static_cast<double>(t));
  for (std::size_t t = 0; t < nt; ++t)
    for (std::size_t iy = 0; iy < 2; ++iy)
      for (std::size_t ix = 0; ix < 3; ++ix) {
        f.u.push_back(f.xs[ix] + static_cast<double>(t));
        f.v.push_back(2.0 * f.ys[iy]);
        f.mask.push_back(false);
      }
  return f;
}

}  // namespace

TEST_CASE("analytic flows") {
  CHECK(velocity_at(UniformFlow{{0.3, -0.1}}, {7, 9}, 123) == Velocity{0.3, -0.1});
  auto r = velocity_at(RigidRotation{{0, 0}, 1.0}, {1, 0}, 0);
  CHECK(r.u == Approx(0).epsilon(1e-15));
  CHECK(r.v == Approx(1));
  CHECK(velocity_at(ZeroFlow{}, {1, 1}, 0) == Velocity{});
}

TEST_CASE("gridded flow interpolation is exact on linear fields") {
  FlowField f = linear_grid(2);
  auto v = velocity_at(f, {0.3, 0.25}, 0.0);
  CHECK(std::abs(v.u - 0.3) < 1e-12);
  CHECK(std::abs(v.v - 0.5) < 1e-12);
  // halfway in time: u = x + 0.5
  v = velocity_at(f, {0.8, 0.5}, 1800.0);
  CHECK(std::abs(v.u - 1.3) < 1e-12);
  // at a sample time the sample is returned
  v = velocity_at(f, {1.0, 1.0}, 3600.0);
  CHECK(v.u == 2.0);
  CHECK(v.v == 2.0);
  CHECK_THROWS_AS(velocity_at(f, {2, 0}, 0), std::out_of_range);
  CHECK_THROWS_AS(velocity_at(f, {0.5, 0.5}, 7200.1), std::out_of_range);
}

TEST_CASE("masked samples contribute zero") {
  auto g = linear_grid(1);
  for (std::size_t i = 0; i < g.mask.size(); ++i) g.mask[i] = true;
  auto v = velocity_at(FlowField{g}, {0.3, 0.3}, 99.0);  // single snapshot: steady
  CHECK(v == Velocity{});
}

TEST_CASE("grid validation") {
  auto g = linear_grid(2);
  g.ts = {10, 5};
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  g = linear_grid(2);
  g.u.pop_back();
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("element velocities and epochs") {
  auto mesh = build_structured_mesh({0, 0, 1, 1}, 2, 2);
  auto z = element_velocities(ZeroFlow{}, mesh, 0);
  CHECK(z.size() == mesh.element_count());
  for (auto v : z) CHECK(v == Velocity{});
  auto g = element_velocities(FlowField{linear_grid(2)}, mesh, 0);
  for (std::size_t e = 0; e < mesh.element_count(); ++e) {
    CHECK(std::abs(g[e].u - mesh.element_geometry(e).centroid().x) < 1e-12);
  }
  FlowField grid = linear_grid(3);
  CHECK(epoch_count(grid) == 3);
  CHECK(flow_epoch(grid, 0) == 0);
  CHECK(flow_epoch(grid, 3599) == 0);
  CHECK(flow_epoch(grid, 3600) == 1);
  CHECK(epoch_time(grid, 2) == 7200);
  CHECK(epoch_count(UniformFlow{}) == 1);
}
