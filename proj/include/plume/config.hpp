#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "plume/experiment.hpp"

namespace plume {

/// Read an INI-style scenario file. Sections: mesh, flow, model, source,
/// sensors, estimator, output, run. Unknown sections or keys, duplicate keys
/// and malformed values raise ConfigError. Relative file paths are resolved
/// against `base_dir`.
ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
ScenarioConfig load_config(const std::filesystem::path& path);

/// Range checks shared by the parser and programmatic callers.
void validate(const ScenarioConfig& config);

/// Canonical text of the settings covered by scenario_hash.
std::string canonical_scenario(const ScenarioConfig& config);

}  // namespace plume
