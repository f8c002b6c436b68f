#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace plume {

using Rng = std::mt19937_64;

/// Counter-based seed derivation: mixes a path of counters into the master
/// seed with the splitmix64 finaliser, so independent streams (per trial, per
/// particle, per step) never depend on draw order elsewhere.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(master, path));
}

/// Stream labels used across the library.
namespace stream {
inline constexpr std::uint64_t sensors = 0x53454e53;
inline constexpr std::uint64_t truth = 0x54525554;
inline constexpr std::uint64_t filter = 0x46494c54;
inline constexpr std::uint64_t resample = 0x52534d50;
inline constexpr std::uint64_t prior = 0x50524952;
}  // namespace stream

}  // namespace plume
