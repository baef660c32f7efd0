#include "reel/heat.hpp"

#include <cmath>
#include <numbers>

#include "reel/rng.hpp"

namespace reel {

namespace {

Config heat_defaults() {
  return Config::parse(R"(
model = heat
nx = 32
ny = 32
dx = 1.0
dt = 0.4
T0 = 1.0
perturbation = 0.2
laser_power = 10.0
laser_radius = 4.0
theta.k = 0.5
theta.rhoCp = 2.0
)");
}

}  // namespace

std::vector<ScalarField> heat_features(const ScalarField& T, const ScalarField& Q) {
  return {laplacian(T), Q};
}

ScalarField smooth_perturbation(const GridSpec& grid, double amplitude, std::uint64_t seed) {
  ScalarField out(grid);
  if (amplitude == 0.0) return out;
  Xoshiro256 rng(seed);
  constexpr int kModes = 4;
  for (int m = 0; m < kModes; ++m) {
    const int kx = static_cast<int>(rng.next() % 3) + (m == 0 ? 1 : 0);
    const int ky = static_cast<int>(rng.next() % 3);
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    const double amp = amplitude / kModes * (0.5 + rng.uniform());
    for (std::size_t i = 0; i < grid.nx; ++i) {
      for (std::size_t j = 0; j < grid.ny; ++j) {
        const double arg = 2.0 * std::numbers::pi *
                               (kx * static_cast<double>(i) / static_cast<double>(grid.nx) +
                                ky * static_cast<double>(j) / static_cast<double>(grid.ny)) +
                           phase;
        out(i, j) += amp * std::cos(arg);
      }
    }
  }
  return out;
}

HeatModel::HeatModel(const Config& config)
    : Model(config.with_defaults(heat_defaults()), {"k", "rhoCp"}, {0.5, 2.0}) {
  T0_ = config_.get_double("T0");
  perturbation_ = config_.get_double("perturbation");
  laser_ = laser_flux(grid_, config_.get_double("laser_power"), config_.get_double("laser_radius"),
                      config_.get_double("laser_x", static_cast<double>(grid_.nx) / 2.0),
                      config_.get_double("laser_y", static_cast<double>(grid_.ny) / 2.0));
  add_channel({"T", {"lap_T", "Q"}, Routing::Vfdd});
}

ModelState HeatModel::initial_state(std::uint64_t seed) const {
  ScalarField T = smooth_perturbation(grid_, perturbation_, derive_seed(seed, 1));
  for (double& v : T.values()) v += T0_;
  ModelState s;
  s.set("T", std::move(T));
  return s;
}

std::vector<std::vector<ScalarField>> HeatModel::features(const ModelState& state) const {
  return {heat_features(state.at("T"), laser_)};
}

ParamFunctions HeatModel::param_functions(std::span<const double> theta) const {
  require_theta(theta);
  const double k = theta[0], c = theta[1];
  ParamFunctions pf;
  pf.values = {{k / c, 1.0 / c}};
  pf.jacobian = {{1.0 / c, -k / (c * c), 0.0, -1.0 / (c * c)}};
  return pf;
}

std::vector<ScalarField> HeatModel::rhs(const ModelState& state,
                                        std::span<const double> theta) const {
  require_theta(theta);
  const double k = theta[0], c = theta[1];
  const ScalarField lap = laplacian(state.at("T"));
  ScalarField out(grid_);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = (k * lap[n] + laser_[n]) / c;
  return {out};
}

double HeatModel::stable_dt(const ModelState&, std::span<const double> theta,
                            std::string* budget) const {
  require_theta(theta);
  const double diffusivity = std::abs(theta[0] / theta[1]);
  if (budget) *budget = "heat: dt <= c_stab dx^2 / (k / rhoCp)";
  if (diffusivity == 0.0) return INFINITY;
  return c_stab_ * grid_.dx * grid_.dx / diffusivity;
}

}  // namespace reel
