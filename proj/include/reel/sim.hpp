#pragma once

// Explicit-Euler forward simulation and trajectories.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "reel/model.hpp"

namespace reel {

/// Which right-hand side drives a step. Monolithic evaluates the physics directly
/// (exact exponential for sintering); Decomposed uses sum_i phi_i(theta) W_i.
enum class StepRule { Monolithic, Decomposed };

StepRule parse_step_rule(const std::string& s);

struct Trajectory {
  GridSpec grid;
  std::string model;
  std::string config_text;
  std::vector<std::string> param_names;
  std::vector<double> theta_true;
  std::uint64_t ic_seed = 0;
  std::uint64_t source_seed = 0;
  std::vector<ModelState> steps;

  double dt() const noexcept { return grid.dt; }
  bool operator==(const Trajectory&) const = default;
};

/// One explicit-Euler step of every evolving field; sources are refreshed for
/// the new time level. Throws StabilityError when grid.dt exceeds the model's
/// budget and DivergenceError on non-finite or runaway output.
ModelState step(const Model& model, const ModelState& state, std::span<const double> theta,
                StepRule rule = StepRule::Monolithic);

/// n_steps + 1 states starting at `initial`. Empty theta means true_params().
Trajectory rollout(const Model& model, const ModelState& initial, std::size_t n_steps,
                   std::span<const double> theta = {}, StepRule rule = StepRule::Monolithic);

/// rollout from model.initial_state(ic_seed).
Trajectory simulate(const Model& model, std::uint64_t ic_seed, std::size_t n_steps,
                    StepRule rule = StepRule::Monolithic);

/// [t][channel] = u(t+1) - u(t) for the model's evolving fields.
std::vector<std::vector<ScalarField>> extract_changes(const Trajectory& traj, const Model& model);

/// Rebuilds the model a trajectory was generated with.
std::unique_ptr<Model> model_for(const Trajectory& traj);

}  // namespace reel
