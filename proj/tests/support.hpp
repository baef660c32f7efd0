#pragma once

#include <cmath>
#include <cstring>
#include <cstdint>
#include <filesystem>
#include <string>

#include "reel/field.hpp"
#include "reel/rng.hpp"

namespace testing {

inline reel::ScalarField random_field(const reel::GridSpec& g, std::uint64_t seed,
                                      double lo = -1.0, double hi = 1.0) {
  reel::Xoshiro256 rng(seed);
  reel::ScalarField f(g);
  for (double& v : f.values()) v = lo + (hi - lo) * rng.uniform();
  return f;
}

inline double max_abs_diff(const reel::ScalarField& a, const reel::ScalarField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

inline bool bitwise_equal(const reel::ScalarField& a, const reel::ScalarField& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double x = a[k], y = b[k];
    if (std::memcmp(&x, &y, sizeof(double)) != 0) return false;
  }
  return true;
}

// Fresh scratch directory per test binary.
inline std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("reel_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace testing
