#pragma once

#include "reel/model.hpp"

namespace reel {

/// Vacancy/interstitial void model under irradiation.
///
/// Evolving fields cv, ci, eta; auxiliary source fields xi, zeta (thermal
/// noise), pv, pi (production) and peta. With h = (eta-1)^2, j = eta^2,
///   fs = (cv - cv_eq)^2 + (ci - ci_eq)^2,  fv = (cv - 1)^2 + ci^2,
///   f  = A_s h fs + A_v j fv + kappa_v/2 |grad cv|^2 + ...
///
///   dcv/dt  = M_v lap(df/dcv - kappa_v lap cv) + s_v (xi + pv) - R cv ci
///   dci/dt  = M_i lap(df/dci - kappa_i lap ci) + s_i (zeta + pi) - R cv ci
///   deta/dt = -L (df/deta - kappa_eta lap eta) + s_eta peta
///
/// theta = (M_v, M_i, A_s, A_v, kappa_v, kappa_i, kappa_eta, L, R, s_v, s_i, s_eta).
/// Sources are regenerated for every step from (source_seed, step).
class NanovoidModel final : public Model {
 public:
  explicit NanovoidModel(const Config& config);

  std::string name() const override { return "nanovoid"; }
  std::vector<std::string> state_fields() const override;
  ModelState initial_state(std::uint64_t seed) const override;
  void refresh_sources(ModelState& state) const override;

  std::vector<std::vector<ScalarField>> features(const ModelState& state) const override;
  ParamFunctions param_functions(std::span<const double> theta) const override;
  std::vector<ScalarField> rhs(const ModelState& state,
                               std::span<const double> theta) const override;
  double stable_dt(const ModelState& state, std::span<const double> theta,
                   std::string* budget) const override;
  void check_state(const ModelState& state) const override;

  double cv_eq() const noexcept { return cv_eq_; }
  double ci_eq() const noexcept { return ci_eq_; }
  bool sources_enabled() const noexcept { return noise_amp_ != 0.0 || production_ != 0.0 ||
                                                 production_eta_ != 0.0; }

 private:
  double cv_eq_;
  double ci_eq_;
  double void_radius_;
  double interface_width_;
  double noise_amp_;
  double production_;
  double production_eta_;
  std::uint64_t source_seed_;
};

}  // namespace reel
