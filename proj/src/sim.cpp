#include "reel/sim.hpp"

#include "reel/error.hpp"

namespace reel {

StepRule parse_step_rule(const std::string& s) {
  if (s == "monolithic") return StepRule::Monolithic;
  if (s == "decomposed") return StepRule::Decomposed;
  throw UsageError("step rule must be monolithic or decomposed, got " + s);
}

ModelState step(const Model& model, const ModelState& state, std::span<const double> theta,
                StepRule rule) {
  const double dt = model.grid().dt;
  std::string budget;
  const double limit = model.stable_dt(state, theta, &budget);
  if (dt > limit) {
    throw StabilityError("dt = " + std::to_string(dt) + " exceeds the explicit-Euler budget " +
                         std::to_string(limit) + " (" + budget + ") at step " +
                         std::to_string(state.step));
  }
  const std::vector<ScalarField> rate =
      rule == StepRule::Monolithic ? model.rhs(state, theta) : model.decomposed_rhs(state, theta);
  ModelState next = state;
  const auto& channels = model.channels();
  for (std::size_t c = 0; c < channels.size(); ++c) axpy(dt, rate[c], next.at(channels[c].field));
  next.step = state.step + 1;
  model.refresh_sources(next);
  model.check_state(next);
  return next;
}

Trajectory rollout(const Model& model, const ModelState& initial, std::size_t n_steps,
                   std::span<const double> theta, StepRule rule) {
  if (n_steps < 1) throw UsageError("rollout needs n_steps >= 1");
  if (theta.empty()) theta = model.true_params();
  model.require_theta(theta);
  Trajectory traj;
  traj.grid = model.grid();
  traj.model = model.name();
  traj.config_text = model.config().text();
  traj.param_names = model.param_names();
  traj.theta_true = model.true_params();
  traj.source_seed = model.config().get_u64("source_seed", 0);
  traj.steps.reserve(n_steps + 1);
  traj.steps.push_back(initial);
  for (std::size_t s = 0; s < n_steps; ++s) traj.steps.push_back(step(model, traj.steps.back(), theta, rule));
  return traj;
}

Trajectory simulate(const Model& model, std::uint64_t ic_seed, std::size_t n_steps,
                    StepRule rule) {
  Trajectory traj = rollout(model, model.initial_state(ic_seed), n_steps, {}, rule);
  traj.ic_seed = ic_seed;
  return traj;
}

std::vector<std::vector<ScalarField>> extract_changes(const Trajectory& traj, const Model& model) {
  if (traj.steps.size() < 2) throw UsageError("extract_changes needs at least two states");
  const auto& channels = model.channels();
  std::vector<std::vector<ScalarField>> out(traj.steps.size() - 1);
  for (std::size_t t = 0; t + 1 < traj.steps.size(); ++t) {
    for (const auto& ch : channels) {
      out[t].push_back(traj.steps[t + 1].at(ch.field) - traj.steps[t].at(ch.field));
    }
  }
  return out;
}

std::unique_ptr<Model> model_for(const Trajectory& traj) {
  return make_model(Config::parse(traj.config_text));
}

}  // namespace reel
