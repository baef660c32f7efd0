#pragma once

// User-facing property checks behind `reel verify`.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "reel/learn.hpp"

namespace reel {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<std::string> suite_names();

/// Runs one suite (vfdd, jl, taylor, gradcheck, conservation). Throws UsageError
/// for an unknown suite.
std::vector<CheckResult> run_suite(const std::string& suite, std::uint64_t seed);

/// Central-difference check in the scaled coordinates z = theta / scale:
/// max_p |g_p - fd_p| / max_p |g_p|, with step h in z.
struct GradCheck {
  std::vector<double> analytic;  // d loss / d z
  std::vector<double> numeric;
  double rel_error = 0.0;
};
GradCheck check_gradient(const Objective& objective, std::span<const double> theta, double h = 1e-4);

/// |sum(f_last) - sum(f_first)| / |sum(f_first)| for `field` over a trajectory.
double conservation_drift(const Trajectory& traj, const std::string& field);

}  // namespace reel
