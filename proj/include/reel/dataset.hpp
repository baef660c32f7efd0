#pragma once

// Trajectory files. Layout (all little-endian):
//
//   "REEL" | u32 version | u64 nx | u64 ny | f64 dx | f64 dt | u64 n_states
//   str model | u32 n_fields, str names... | u32 n_params, (str name, f64 value)...
//   u64 ic_seed | u64 source_seed | u64 first_step | str config
//   payload: for each state, n_fields x nx*ny f64 (steps are consecutive)
//
// str is a u64 length followed by raw bytes.

#include <cstdint>
#include <string>
#include <vector>

#include "reel/sim.hpp"

namespace reel {

inline constexpr std::uint32_t kDatasetVersion = 1;

struct DatasetHeader {
  std::uint32_t version = kDatasetVersion;
  GridSpec grid;
  std::uint64_t n_states = 0;
  std::string model;
  std::vector<std::string> fields;
  std::vector<std::string> param_names;
  std::vector<double> theta_true;
  std::uint64_t ic_seed = 0;
  std::uint64_t source_seed = 0;
  std::uint64_t first_step = 0;
  std::string config_text;
  /// Byte offset of the first state.
  std::uint64_t payload_offset = 0;
};

void save(const Trajectory& traj, const std::string& path);
/// Throws FormatError naming the offset on bad magic, version or truncation.
Trajectory load(const std::string& path);
/// Reads the header only; the payload is not touched beyond a size check.
DatasetHeader read_header(const std::string& path);

/// Bytes a file with this header occupies.
std::uint64_t expected_file_size(const DatasetHeader& h);

}  // namespace reel
