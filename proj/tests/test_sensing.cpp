#include <doctest.h>

#include <cmath>
#include <random>

#include "plume/normal.hpp"
#include "plume/sensing.hpp"

using namespace plume;
using doctest::Approx;

namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("standard normal helpers") {
  CHECK(normal::cdf(0.0) == Approx(0.5));
  CHECK(normal::cdf(1.96) == Approx(0.9750021));
  CHECK(normal::log_cdf(-40.0) == Approx(-804.608).epsilon(1e-5));
  CHECK(normal::log_upper_tail(40.0) == Approx(normal::log_cdf(-40.0)));
  CHECK(std::exp(normal::log_cdf_diff(-0.25, 0.25)) == Approx(phi(0.25) - phi(-0.25)));
  // Deep in the upper tail the naive difference is 0.
  const double deep = normal::log_cdf_diff(30.0, 30.1);
  CHECK(std::isfinite(deep));
  CHECK(deep == Approx(normal::log_cdf_diff(-30.1, -30.0)));
  CHECK(normal::log_cdf_diff(1.0, 1.0) == -INFINITY);
  CHECK(normal::log_pdf(0.0, 0.0, 1.0) == Approx(-0.5 * std::log(2 * M_PI)));
  CHECK(normal::log_add(std::log(2.0), std::log(3.0)) == Approx(std::log(5.0)));
  CHECK(normal::log_add(-INFINITY, 1.5) == 1.5);
}

TEST_CASE("quantiser levels") {
  Quantiser q(1.0, 4);
  CHECK(q.level(0) == Approx(-0.75));
  CHECK(q.level(1) == Approx(-0.25));
  CHECK(q.level(2) == Approx(0.25));
  CHECK(q.level(3) == Approx(0.75));
  CHECK(q.quantise(0.3) == Approx(0.25));
  CHECK(q.quantise(1.0) == Approx(0.75));
  CHECK(q.quantise(-1.0) == Approx(-0.75));
  CHECK(q.quantise(7.0) == Approx(0.75));
  CHECK(q.quantise(-7.0) == Approx(-0.75));
  CHECK(q.cell_width() == Approx(0.5));
  CHECK(q.proposal_density() == Approx(2.0));
  CHECK(q.is_level(0.25));
  CHECK_FALSE(q.is_level(0.3));
  CHECK_THROWS(Quantiser(0.0, 4));
  CHECK_THROWS(Quantiser(1.0, 0));

  Quantiser fine(483.19, 10000);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-483.19, 483.19);
  for (int i = 0; i < 1000; ++i) {
    const double y = u(rng);
    CHECK(std::abs(fine.quantise(y) - y) <= fine.half_width() * (1 + 1e-9));
  }
}

TEST_CASE("cell and observation likelihoods") {
  Quantiser q(1.0, 4);
  CHECK(cell_probability(q, 0.25, 0.25, 1.0) == Approx(0.19741).epsilon(1e-4));
  CHECK(cell_probability(q, 0.25, 0.25, 1.0) == Approx(phi(0.25) - phi(-0.25)));
  CHECK(std::exp(log_cell_probability(q, 0.25, 0.25, 1.0)) == Approx(cell_probability(q, 0.25, 0.25, 1.0)));

  const double mix = observation_likelihood(q, 0.25, 0.25, 1.0, 0.85);
  CHECK(mix == Approx(0.19652).epsilon(1e-4));
  CHECK(mix == Approx(0.85 * (phi(0.25) - phi(-0.25)) + 0.15 * (phi(0.5) - phi(0.0))));
  CHECK(observation_likelihood(q, 0.25, 0.6, 1.0, 1.0) == Approx(cell_probability(q, 0.25, 0.6, 1.0)));
  CHECK(observation_likelihood(q, 0.25, 0.6, 1.0, 0.0) == Approx(cell_probability(q, 0.25, 0.0, 1.0)));
  CHECK(std::exp(log_observation_likelihood(q, 0.25, 0.25, 1.0, 0.85)) == Approx(mix));

  // Cells plus the two tails beyond +-eta sum to one.
  const double sd = std::sqrt(0.7);
  double total = phi((-1.0 - 0.3) / sd) + (1.0 - phi((1.0 - 0.3) / sd));
  for (int h = 0; h < 4; ++h) total += cell_probability(q, q.level(h), 0.3, 0.7);
  CHECK(total == Approx(1.0));

  // Far from the reading the log form stays finite.
  CHECK(std::isfinite(log_observation_likelihood(Quantiser(500, 10000), 0.05, 400.0, 5e-3, 1.0)));
}

TEST_CASE("measurement matrix") {
  auto mesh = build_structured_mesh({0, 0, 2, 2}, 2, 2);
  std::vector<Point2> pos{{0.3, 0.7}, {1.0, 1.0}, {1.9, 0.2}};
  auto h = build_measurement_matrix(mesh, pos);
  CHECK(h.rows() == 3);
  CHECK(h.cols() == static_cast<Eigen::Index>(mesh.node_count() + 1));
  Eigen::MatrixXd d(h);
  for (int j = 0; j < 3; ++j) {
    CHECK(d.row(j).sum() == Approx(1.0));
    CHECK(d(j, d.cols() - 1) == 0.0);
    CHECK(d.row(j).minCoeff() >= 0.0);
  }
  // A sensor on a node reads that node exactly.
  CHECK(d.row(1).maxCoeff() == Approx(1.0));
  // Linear fields are reproduced.
  Eigen::VectorXd x(mesh.node_count() + 1);
  for (std::size_t i = 0; i < mesh.node_count(); ++i) x(i) = 2 * mesh.nodes()[i].x - mesh.nodes()[i].y + 1;
  x(x.size() - 1) = 99;
  Eigen::VectorXd y = h * x;
  for (int j = 0; j < 3; ++j) CHECK(y(j) == Approx(2 * pos[j].x - pos[j].y + 1));

  std::vector<Point2> outside{{3, 3}};
  CHECK_THROWS_AS(build_measurement_matrix(mesh, outside), SensingError);
}

TEST_CASE("random sensor positions stay on the mesh") {
  TriMesh tri({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 2}});
  std::mt19937_64 rng(5);
  auto pos = random_sensor_positions(tri, 200, rng);
  CHECK(pos.size() == 200);
  for (const auto& p : pos) CHECK(p.x + p.y <= 1.0 + 1e-12);
}

TEST_CASE("observation model statistics") {
  auto mesh = build_structured_mesh({0, 0, 1, 1}, 1, 1);
  Sensor s;
  s.position = {0.5, 0.25};
  s.eta = 20;
  s.levels = 1000;
  s.noise_variance = 0.01;
  s.detection_prob = 0.85;
  SensorNetwork net(mesh, {s});
  Eigen::VectorXd x = Eigen::VectorXd::Constant(5, 10.0);
  std::mt19937_64 rng(9);
  const int n = 20000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    auto obs = observe(net, {x.data(), 5}, rng);
    REQUIRE(obs.quantised.size() == 1);
    CHECK(net.quantiser(0).is_level(obs.quantised[0]));
    hits += obs.detected[0] ? 1 : 0;
    // Quantisation error never exceeds half a cell.
    CHECK(std::abs(obs.quantised[0] - obs.raw[0]) <= net.quantiser(0).half_width() * (1 + 1e-9));
  }
  const double p = static_cast<double>(hits) / n;
  const double se = std::sqrt(0.85 * 0.15 / n);
  CHECK(std::abs(p - 0.85) < 4 * se);
  CHECK(simulate_measurement(3.0, false, 0.1) == 0.1);
  CHECK(simulate_measurement(3.0, true, 0.1) == Approx(3.1));
}
