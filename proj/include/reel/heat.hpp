#pragma once

#include "reel/model.hpp"

namespace reel {

/// Transient conduction with constant rho Cp and k under a stationary laser:
///   dT/dt = (k / rho Cp) lap T + (1 / rho Cp) Q.
/// theta = (k, rhoCp); features [lap T, Q]; one channel "T".
///
/// Config keys: T0, perturbation, laser_power, laser_radius, laser_x, laser_y.
class HeatModel final : public Model {
 public:
  explicit HeatModel(const Config& config);

  std::string name() const override { return "heat"; }
  std::vector<std::string> state_fields() const override { return {"T"}; }
  ModelState initial_state(std::uint64_t seed) const override;

  std::vector<std::vector<ScalarField>> features(const ModelState& state) const override;
  ParamFunctions param_functions(std::span<const double> theta) const override;
  std::vector<ScalarField> rhs(const ModelState& state,
                               std::span<const double> theta) const override;
  double stable_dt(const ModelState& state, std::span<const double> theta,
                   std::string* budget) const override;

  const ScalarField& laser() const noexcept { return laser_; }

 private:
  ScalarField laser_;
  double T0_;
  double perturbation_;
};

/// [lap T, Q]; shared with the thermal channel of the sintering model.
std::vector<ScalarField> heat_features(const ScalarField& T, const ScalarField& Q);

/// Smooth seeded perturbation: a few random low Fourier modes with amplitudes
/// summing to at most `amplitude`.
ScalarField smooth_perturbation(const GridSpec& grid, double amplitude, std::uint64_t seed);

}  // namespace reel
