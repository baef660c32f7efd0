#include "reel/model.hpp"

#include <cmath>
#include <numbers>

#include "reel/error.hpp"
#include "reel/heat.hpp"
#include "reel/nanovoid.hpp"
#include "reel/sintering.hpp"

namespace reel {

bool ModelState::has(std::string_view name) const {
  for (const auto& n : names) {
    if (n == name) return true;
  }
  return false;
}

const ScalarField& ModelState::at(std::string_view name) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return fields[k];
  }
  throw UsageError("state has no field named " + std::string(name));
}

ScalarField& ModelState::at(std::string_view name) {
  return const_cast<ScalarField&>(static_cast<const ModelState&>(*this).at(name));
}

void ModelState::set(std::string_view name, ScalarField field) {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) {
      fields[k] = std::move(field);
      return;
    }
  }
  names.emplace_back(name);
  fields.push_back(std::move(field));
}

Model::Model(const Config& config, std::vector<std::string> params, std::vector<double> defaults)
    : config_(config), param_names_(std::move(params)) {
  grid_ = GridSpec(static_cast<std::size_t>(config.get_int("nx", 32)),
                   static_cast<std::size_t>(config.get_int("ny", config.get_int("nx", 32))),
                   config.get_double("dx", 1.0), config.get_double("dt", 0.1));
  c_stab_ = config.get_double("c_stab", 0.2);
  if (!(c_stab_ > 0.0)) throw UsageError("c_stab must be > 0");
  true_params_.resize(param_names_.size());
  param_scales_.resize(param_names_.size());
  for (std::size_t p = 0; p < param_names_.size(); ++p) {
    true_params_[p] = config.get_double("theta." + param_names_[p], defaults[p]);
    const double fallback = true_params_[p] != 0.0 ? std::abs(true_params_[p]) : 1.0;
    param_scales_[p] = config.get_double("scale." + param_names_[p], fallback);
    if (!(param_scales_[p] > 0.0)) {
      throw UsageError("scale." + param_names_[p] + " must be > 0");
    }
  }
}

std::size_t Model::param_index(std::string_view name) const {
  for (std::size_t p = 0; p < param_names_.size(); ++p) {
    if (param_names_[p] == name) return p;
  }
  throw UsageError("model " + this->name() + " has no parameter " + std::string(name));
}

void Model::require_theta(std::span<const double> theta) const {
  if (theta.size() != param_names_.size()) {
    throw UsageError("model " + name() + " expects " + std::to_string(param_names_.size()) +
                     " parameters, got " + std::to_string(theta.size()));
  }
}

std::vector<ScalarField> Model::decomposed_rhs(const ModelState& state,
                                               std::span<const double> theta) const {
  const ParamFunctions pf = param_functions(theta);
  const auto feats = features(state);
  std::vector<ScalarField> out;
  out.reserve(channels_.size());
  for (std::size_t c = 0; c < channels_.size(); ++c) {
    ScalarField acc(grid_);
    for (std::size_t i = 0; i < feats[c].size(); ++i) axpy(pf.values[c][i], feats[c][i], acc);
    out.push_back(std::move(acc));
  }
  return out;
}

void Model::check_state(const ModelState& state) const {
  for (const auto& ch : channels_) {
    const ScalarField& f = state.at(ch.field);
    if (!all_finite(f)) {
      throw DivergenceError("non-finite values in field " + ch.field + " at step " +
                                std::to_string(state.step),
                            state.step);
    }
  }
}

ScalarField laser_flux(const GridSpec& grid, double gamma, double omega, double center_x,
                       double center_y) {
  if (!(gamma >= 0.0)) throw DomainError("laser power must be >= 0");
  if (!(omega > 0.0)) throw DomainError("laser spot radius must be > 0");
  ScalarField q(grid);
  const double peak = 2.0 * gamma / (std::numbers::pi * omega * omega);
  const double lx = static_cast<double>(grid.nx);
  const double ly = static_cast<double>(grid.ny);
  for (std::size_t i = 0; i < grid.nx; ++i) {
    for (std::size_t j = 0; j < grid.ny; ++j) {
      double ddx = static_cast<double>(i) - center_x;
      double ddy = static_cast<double>(j) - center_y;
      ddx -= lx * std::round(ddx / lx);
      ddy -= ly * std::round(ddy / ly);
      const double r2 = (ddx * ddx + ddy * ddy) * grid.dx * grid.dx;
      q(i, j) = peak * std::exp(-r2 / (2.0 * omega * omega));
    }
  }
  return q;
}

double interp_h(double phi, HForm form) {
  if (form == HForm::Printed) return phi * phi * phi * (15.0 - 10.0 * phi + 6.0 * phi * phi);
  return phi * phi * phi * (10.0 - 15.0 * phi + 6.0 * phi * phi);
}

ScalarField interp_h(const ScalarField& phi, HForm form) {
  ScalarField out(phi.grid());
  for (std::size_t k = 0; k < phi.size(); ++k) out[k] = interp_h(phi[k], form);
  return out;
}

ScalarField circle_profile(const GridSpec& grid, double cx, double cy, double radius,
                           double width) {
  ScalarField out(grid);
  const double lx = static_cast<double>(grid.nx);
  const double ly = static_cast<double>(grid.ny);
  for (std::size_t i = 0; i < grid.nx; ++i) {
    for (std::size_t j = 0; j < grid.ny; ++j) {
      double ddx = static_cast<double>(i) - cx;
      double ddy = static_cast<double>(j) - cy;
      ddx -= lx * std::round(ddx / lx);
      ddy -= ly * std::round(ddy / ly);
      const double r = std::sqrt(ddx * ddx + ddy * ddy) * grid.dx;
      out(i, j) = 0.5 * (1.0 - std::tanh(2.0 * (r - radius) / width));
    }
  }
  return out;
}

std::unique_ptr<Model> make_model(const Config& config) {
  const std::string name = config.get_string("model");
  if (name == "heat") return std::make_unique<HeatModel>(config);
  if (name == "sintering") return std::make_unique<SinteringModel>(config);
  if (name == "nanovoid") return std::make_unique<NanovoidModel>(config);
  throw UsageError("unknown model: " + name + " (expected heat, sintering or nanovoid)");
}

}  // namespace reel
