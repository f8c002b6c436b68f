#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "plume/config.hpp"
#include "plume/io.hpp"

using namespace plume;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  auto p = fs::temp_directory_path() / ("plume_io_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

ScenarioConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

}  // namespace

TEST_CASE("double formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 483.19123456789}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(std::nan("")) == "nan");
}

TEST_CASE("mesh files") {
  auto mesh = build_structured_mesh({0, 0, 3, 1}, 3, 2);
  std::stringstream s;
  write_mesh(s, mesh);
  auto back = parse_mesh(s);
  CHECK(back.nodes() == mesh.nodes());
  CHECK(back.elements() == mesh.elements());

  std::istringstream bad("nodes 3\n0 0\n1 0\n0 1\nelements 1\n0 1 7\n");
  CHECK_THROWS(parse_mesh(bad));
  std::istringstream truncated("nodes 3\n0 0\n");
  CHECK_THROWS_AS(parse_mesh(truncated), IoError);
}

TEST_CASE("flow files") {
  GriddedFlow g;
  g.xs = {0, 1, 2};
  g.ys = {0, 1};
  g.ts = {0, 5};
  for (std::size_t i = 0; i < 12; ++i) {
    g.u.push_back(0.1 * i);
    g.v.push_back(-0.2 * i);
    g.mask.push_back(i == 4);
  }
  std::stringstream s;
  write_flow(s, g);
  auto back = parse_flow(s);
  CHECK(back.xs == g.xs);
  CHECK(back.ys == g.ys);
  CHECK(back.ts == g.ts);
  CHECK(back.mask == g.mask);
  for (std::size_t i = 0; i < 12; ++i) {
    if (g.mask[i]) continue;
    CHECK(back.u[i] == g.u[i]);
    CHECK(back.v[i] == g.v[i]);
  }
  std::istringstream unsorted("grid 2 1 1\nxs: 1 0\nys: 0\nts: 0\n1 1\n1 1\n");
  CHECK_THROWS(parse_flow(unsorted));
}

TEST_CASE("sensor files") {
  std::vector<Sensor> s{{{0.25, 0.5}, 3.0, 100, 0.01, 0.9}, {{1.0 / 3, 2.0}, 483.19, 10000, 5e-3, 0.85}};
  std::stringstream io;
  write_sensors(io, s);
  auto back = parse_sensors(io);
  REQUIRE(back.size() == 2);
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(back[j].position == s[j].position);
    CHECK(back[j].eta == s[j].eta);
    CHECK(back[j].levels == s[j].levels);
    CHECK(back[j].noise_variance == s[j].noise_variance);
    CHECK(back[j].detection_prob == s[j].detection_prob);
  }
}

TEST_CASE("observation logs") {
  ObservationLog log;
  log.config_hash = "abc123";
  log.levels = {{{0.1, 0.2}, {0.3, -0.4}}, {{1.0 / 3, 5.0}, {6.0, 7.0}}};
  std::stringstream s;
  write_observations(s, log);
  auto back = parse_observations(s);
  CHECK(back.config_hash == "abc123");
  CHECK(back.levels == log.levels);
}

TEST_CASE("output files refuse to overwrite") {
  auto dir = scratch_dir();
  auto file = dir / "sub" / "x.txt";
  fs::remove_all(dir / "sub");
  { auto out = open_output(file, false); out << "1\n"; }
  CHECK(fs::exists(file));
  CHECK_THROWS_AS(open_output(file, false), IoError);
  CHECK_NOTHROW(open_output(file, true));

  auto mesh = build_structured_mesh({0, 0, 1, 1}, 2, 2);
  write_mesh_file(dir / "m.msh", mesh);
  CHECK(read_mesh_file(dir / "m.msh").nodes() == mesh.nodes());
  CHECK_THROWS_AS(read_mesh_file(dir / "missing.msh"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("config parsing") {
  auto c = parse(
      "[mesh]\nrect = 0 0 10 20\nnx = 3 ; inline\n[model]\ndt = auto\ndiffusivity = 1.5e-3   # note\n"
      "[sensors]\neta = auto\ncount = 7\n[estimator]\nmethod = enkf\nsize = 50\n[run]\nseed = 9\n");
  CHECK(c.domain.x1 == 10);
  CHECK(c.domain.y1 == 20);
  CHECK(c.nx == 3);
  CHECK(c.dt == 0.0);
  CHECK(c.diffusivity == 1.5e-3);
  CHECK(c.eta == 0.0);
  CHECK(c.sensor_count == 7);
  CHECK(c.method == EstimatorKind::enkf);
  CHECK(c.size == 50);
  CHECK(c.seed == 9);

  CHECK_THROWS_AS(parse("[mesh]\nnz = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse("[bogus]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[mesh]\nnx = three\n"), ConfigError);
  CHECK_THROWS_AS(parse("[sensors]\ndetection_prob = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("[estimator]\nmethod = enkf\nsize = 1\n"), ConfigError);

  auto desk = load_config(PLUME_SOURCE_DIR "/configs/desk.ini");
  CHECK(desk.seed == 1);
  CHECK(desk.sensor_count == 40);
  CHECK(desk.diffusivity == 1.12e-8);
}

TEST_CASE("config hash scope") {
  ScenarioConfig a;
  auto b = a;
  b.method = EstimatorKind::enkf;
  b.size = 500;
  b.threads = 4;
  CHECK(scenario_hash(a) == scenario_hash(b));
  b.seed = 2;
  CHECK(scenario_hash(a) != scenario_hash(b));
  auto d = a;
  d.detection_prob = 0.9;
  CHECK(scenario_hash(a) != scenario_hash(d));
  CHECK(canonical_scenario(a).find("model.diffusivity=") != std::string::npos);
}
