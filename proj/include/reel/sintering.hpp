#pragma once

#include "reel/model.hpp"
#include "reel/taylor.hpp"

namespace reel {

struct FreeEnergyParams {
  double A = 16.0;
  double B = 1.0;
};

/// Solid-state sintering under a stationary laser.
///
/// Fields: conserved density phi, one order parameter eta_g per grain, and the
/// temperature T. Bulk free energy
///   f = A phi^2 (1-phi)^2 + B [phi^2 + 6 (1-phi) S2 - 4 (2-phi) S3 + 3 S2^2],
///   S2 = sum eta^2, S3 = sum eta^3,
/// plus eps_phi/2 |grad phi|^2 + eps_eta/2 sum |grad eta|^2.
///
///   dphi/dt = div(M grad mu),  mu = df/dphi - eps_phi lap phi
///   deta/dt = -L (df/deta - eps_eta lap eta)
///   dT/dt   = (k lap T + Q) / rhoCp
///   M = sum_l D_l0 exp(-Q_l / kB T) Vm / (kB T) c_l(phi, eta)
///
/// with carriers c_vol = h(phi), c_vap = 1 - h(phi), c_surf = phi (1 - phi),
/// c_GB = sum_{i != j} eta_i eta_j. The exponential is expanded to `taylor_order`
/// in x = Q_l / (kB T); because mu is linear in (A, B, eps_phi) each phi feature is
/// div_flux(c_l s_i(T), g) for g in {df/dphi|_A, df/dphi|_B, -lap phi} with
/// parameter function D_l0 Q_l^i theta_g.
///
/// theta = (k, rhoCp, A, B, eps_phi, eps_eta, L, D_vol0, Q_vol, D_vap0, Q_vap,
///          D_surf0, Q_surf, D_GB0, Q_GB).
class SinteringModel final : public Model {
 public:
  static constexpr std::size_t kModes = 4;

  explicit SinteringModel(const Config& config);

  std::string name() const override { return "sintering"; }
  std::vector<std::string> state_fields() const override;
  ModelState initial_state(std::uint64_t seed) const override;

  std::vector<std::vector<ScalarField>> features(const ModelState& state) const override;
  ParamFunctions param_functions(std::span<const double> theta) const override;
  /// Uses the exact exponential unless `exact_mobility = false`.
  std::vector<ScalarField> rhs(const ModelState& state,
                               std::span<const double> theta) const override;
  double stable_dt(const ModelState& state, std::span<const double> theta,
                   std::string* budget) const override;
  void check_state(const ModelState& state) const override;

  std::size_t grains() const noexcept { return grains_; }
  int taylor_order() const noexcept { return order_; }
  double kB() const noexcept { return kB_; }
  HForm h_form() const noexcept { return h_form_; }
  const ScalarField& laser() const noexcept { return laser_; }

  /// Mobility carriers c_l, in the order vol, vap, surf, GB.
  std::vector<ScalarField> carriers(const ModelState& state) const;
  /// D_l0 Vm / (kB T) c_l per mode: the mobility with the exponential factor dropped.
  std::vector<ScalarField> mode_prefactors(const ModelState& state,
                                           std::span<const double> theta) const;
  /// Total mobility, with the exact exponential or its truncated series.
  ScalarField mobility(const ModelState& state, std::span<const double> theta, bool exact) const;
  /// max over cells and modes of Q_l / (kB T).
  double max_arrhenius_argument(const ModelState& state, std::span<const double> theta) const;

 private:
  std::size_t grains_;
  int order_;
  double kB_;
  double Vm_;
  double T0_;
  double particle_radius_;
  double interface_width_;
  bool exact_mobility_;
  HForm h_form_;
  ScalarField laser_;
};

/// df/dphi - eps_phi lap phi for the sintering free energy.
ScalarField sintering_chemical_potential(const ModelState& state, std::size_t grains,
                                         double eps_phi, const FreeEnergyParams& fe);

/// Bulk free-energy density f(phi, eta) per cell.
ScalarField sintering_bulk_energy(const ModelState& state, std::size_t grains,
                                  const FreeEnergyParams& fe);

std::string eta_name(std::size_t g);

}  // namespace reel
