#include <doctest.h>

#include <random>

#include "plume/mesh.hpp"

using namespace plume;
using doctest::Approx;

TEST_CASE("structured mesh counts and areas") {
  auto m1 = build_structured_mesh({0, 0, 1, 1}, 1, 1);
  CHECK(m1.node_count() == 4);
  CHECK(m1.element_count() == 2);
  for (std::size_t e = 0; e < 2; ++e) CHECK(m1.element_geometry(e).area == Approx(0.5));

  auto m2 = build_structured_mesh({0, 0, 1, 1}, 2, 2);
  CHECK(m2.node_count() == 9);
  CHECK(m2.element_count() == 8);
  CHECK(m2.total_area() == Approx(1.0).epsilon(1e-12));

  auto m3 = build_structured_mesh({0, 0, 2, 1}, 4, 2);
  CHECK(m3.node_count() == 15);
  CHECK(m3.element_count() == 16);

  auto big = build_structured_mesh({0, 0, 1000, 1000}, 20, 20);
  CHECK(std::abs(big.total_area() - 1e6) < 1e-9 * 1e6);
}

TEST_CASE("element geometry by hand") {
  auto g = make_geometry({0, 0}, {1, 0}, {0, 1});
  CHECK(g.area == 0.5);
  CHECK(g.x21 == 1);
  CHECK(g.y32 == 1);
  CHECK(g.x32 == -1);
  CHECK(g.y21 == 0);
  CHECK(make_geometry({0, 0}, {2, 0}, {0, 2}).area == 2.0);
  CHECK(g.length_scale() == Approx(1.0));
}

TEST_CASE("mesh validation") {
  std::vector<Point2> nodes{{0, 0}, {1, 0}, {2, 0}, {0, 1}};
  CHECK_THROWS_AS(TriMesh(nodes, {{0, 1, 2}}), MeshError);  // collinear
  CHECK_THROWS_AS(TriMesh(nodes, {{0, 3, 1}}), MeshError);  // clockwise
  CHECK_THROWS_AS(TriMesh(nodes, {{0, 1, 1}}), MeshError);  // repeated node
  CHECK_THROWS_AS(TriMesh(nodes, {{0, 1, 7}}), MeshError);  // out of range
  CHECK_NOTHROW(TriMesh(nodes, {{0, 1, 3}}));
  auto m = build_structured_mesh({0, 0, 1, 1}, 1, 1);
  CHECK_THROWS_AS(m.element_geometry(2), std::out_of_range);
}

TEST_CASE("shape functions") {
  auto g = make_geometry({0, 0}, {1, 0}, {0, 1});
  auto b = shape_functions(g, {0, 0});
  CHECK(b[0] == Approx(1));
  CHECK(b[1] == Approx(0));
  CHECK(b[2] == Approx(0));
  b = shape_functions(g, {1.0 / 3, 1.0 / 3});
  for (double v : b) CHECK(v == Approx(1.0 / 3));
  b = shape_functions(g, {0.3, 0.4});
  CHECK(b[0] == Approx(0.3));
  CHECK(b[1] == Approx(0.3));
  CHECK(b[2] == Approx(0.4));
}

TEST_CASE("shape function invariants on random triangles") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5, 5), w(0, 1);
  for (int rep = 0; rep < 200; ++rep) {
    Point2 a{u(rng), u(rng)}, b{u(rng), u(rng)}, c{u(rng), u(rng)};
    // Elements are counter-clockwise by contract.
    if ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y) < 0) std::swap(b, c);
    auto g = make_geometry(a, b, c);
    if (g.area < 1e-3) continue;
    // Partition of unity anywhere in the plane.
    Point2 p{u(rng), u(rng)};
    auto s = shape_functions(g, p);
    CHECK(std::abs(s[0] + s[1] + s[2] - 1.0) < 1e-12);
    // Nodal interpolation.
    for (int i = 0; i < 3; ++i) {
      auto n = shape_functions(g, g.nodes[static_cast<std::size_t>(i)]);
      for (int j = 0; j < 3; ++j) CHECK(std::abs(n[static_cast<std::size_t>(j)] - (i == j)) < 1e-12);
    }
    // Linear reproduction at an interior point.
    double l1 = w(rng), l2 = w(rng) * (1 - l1);
    Point2 q{l1 * g.nodes[0].x + l2 * g.nodes[1].x + (1 - l1 - l2) * g.nodes[2].x,
             l1 * g.nodes[0].y + l2 * g.nodes[1].y + (1 - l1 - l2) * g.nodes[2].y};
    auto f = [](Point2 z) { return 0.7 - 1.3 * z.x + 2.1 * z.y; };
    auto sq = shape_functions(g, q);
    double interp = 0;
    for (int i = 0; i < 3; ++i) interp += sq[static_cast<std::size_t>(i)] * f(g.nodes[static_cast<std::size_t>(i)]);
    CHECK(std::abs(interp - f(q)) < 1e-10);
    for (double v : sq) CHECK(v >= -1e-12);
  }
}

TEST_CASE("point location") {
  auto m = build_structured_mesh({0, 0, 1, 1}, 1, 1);
  auto e = m.locate_point({0.75, 0.25});
  REQUIRE(e);
  CHECK(*e == 0);  // lower-right triangle {sw, se, ne}
  CHECK(m.locate_point({0.25, 0.75}) == std::optional<std::size_t>(1));
  CHECK(m.locate_point({0.5, 0.5}) == std::optional<std::size_t>(0));  // diagonal: lowest index
  CHECK_FALSE(m.locate_point({5, 5}));
  CHECK(m.locate_point({1.0, 1.0}));  // corner is closed
}
