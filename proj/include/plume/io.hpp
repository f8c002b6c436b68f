#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "plume/flowfield.hpp"
#include "plume/mesh.hpp"
#include "plume/sensing.hpp"

namespace plume {

struct TrialResult;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// %.17g — enough digits for every double to round-trip.
std::string format_double(double v);

// Mesh: "nodes C" then C lines "x y"; "elements E" then E lines "i j k".
TriMesh parse_mesh(std::istream& in);
void write_mesh(std::ostream& out, const TriMesh& mesh);
TriMesh read_mesh_file(const std::filesystem::path& path);
void write_mesh_file(const std::filesystem::path& path, const TriMesh& mesh);

// Flow grid: "grid nx ny nt", then "xs:", "ys:", "ts:" axis lines, then
// nt*ny*nx lines "u v" in (t, y, x) order; "nan nan" marks land.
GriddedFlow parse_flow(std::istream& in);
void write_flow(std::ostream& out, const GriddedFlow& flow);
GriddedFlow read_flow_file(const std::filesystem::path& path);
void write_flow_file(const std::filesystem::path& path, const GriddedFlow& flow);

// Sensor layout: one sensor per line, "x y eta levels noise_variance detection_prob".
std::vector<Sensor> parse_sensors(std::istream& in);
void write_sensors(std::ostream& out, const std::vector<Sensor>& sensors);
std::vector<Sensor> read_sensor_file(const std::filesystem::path& path);
void write_sensor_file(const std::filesystem::path& path, const std::vector<Sensor>& sensors);

/// Quantised readings for every trial: levels[trial][step][sensor], steps 1..K.
struct ObservationLog {
  std::string config_hash;
  std::vector<std::vector<std::vector<double>>> levels;
};

void write_observations(std::ostream& out, const ObservationLog& log);
ObservationLog parse_observations(std::istream& in);
ObservationLog read_observation_file(const std::filesystem::path& path);

/// Truth trajectories: one row per (trial, step) with every stride-th node
/// value and the strength; step 0 is the initial state.
void write_truth(std::ostream& out, const std::string& config_hash,
                 const std::vector<std::vector<Eigen::VectorXd>>& trials, std::size_t stride);

/// One row per (trial, step): error norm, strength estimate, true strength.
void write_estimates(std::ostream& out, const std::string& config_hash, const std::vector<TrialResult>& results);

/// Open for writing; refuses to replace an existing file unless `force`.
std::ofstream open_output(const std::filesystem::path& path, bool force);

}  // namespace plume
