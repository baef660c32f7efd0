#pragma once

// Decomposable PDE models: for every evolving field u,
//
//   du/dt = sum_i phi_i(theta) W_i(state)
//
// with parameter functions phi_i that depend on theta only and features W_i that
// depend on the state only. Models also expose the monolithic right-hand side
// (the same physics evaluated directly) which serves as ground truth and as the
// oracle for the decomposition.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reel/config.hpp"
#include "reel/field.hpp"

namespace reel {

/// Named fields of one time level. Evolving fields come first; models with
/// external sources append them as auxiliary fields.
struct ModelState {
  std::vector<std::string> names;
  std::vector<ScalarField> fields;
  std::uint64_t step = 0;

  bool has(std::string_view name) const;
  /// Throws UsageError for an unknown name.
  const ScalarField& at(std::string_view name) const;
  ScalarField& at(std::string_view name);
  /// Replaces an existing field or appends a new one.
  void set(std::string_view name, ScalarField field);

  bool operator==(const ModelState&) const = default;
};

/// How preprocessing splits a channel's signals between the two domains.
enum class Routing : std::uint8_t { Vfdd = 0, ValueOnly = 1, FrequencyOnly = 2 };

struct ChannelSpec {
  std::string field;
  std::vector<std::string> features;
  Routing routing = Routing::Vfdd;
};

/// phi(theta) per channel and its Jacobian d phi_i / d theta_j (row-major,
/// features x params).
struct ParamFunctions {
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> jacobian;
};

struct ParamVector {
  std::vector<std::string> names;
  std::vector<double> theta;
};

class Model {
 public:
  virtual ~Model() = default;

  virtual std::string name() const = 0;

  const GridSpec& grid() const noexcept { return grid_; }
  const Config& config() const noexcept { return config_; }
  const std::vector<std::string>& param_names() const noexcept { return param_names_; }
  const std::vector<double>& true_params() const noexcept { return true_params_; }
  /// Magnitudes used for initialization and as optimizer coordinates.
  const std::vector<double>& param_scales() const noexcept { return param_scales_; }
  const std::vector<ChannelSpec>& channels() const noexcept { return channels_; }
  double c_stab() const noexcept { return c_stab_; }
  std::size_t param_count() const noexcept { return param_names_.size(); }
  std::size_t param_index(std::string_view name) const;

  /// Evolving fields followed by auxiliary (source) fields.
  virtual std::vector<std::string> state_fields() const = 0;
  /// Seeded initial condition, sources included.
  virtual ModelState initial_state(std::uint64_t seed) const = 0;
  /// Fill auxiliary fields for time level state.step. No-op for models without sources.
  virtual void refresh_sources(ModelState&) const {}

  /// Feature fields per channel, independent of theta.
  virtual std::vector<std::vector<ScalarField>> features(const ModelState& state) const = 0;
  virtual ParamFunctions param_functions(std::span<const double> theta) const = 0;
  /// Monolithic right-hand side per channel.
  virtual std::vector<ScalarField> rhs(const ModelState& state,
                                       std::span<const double> theta) const = 0;
  /// sum_i phi_i(theta) W_i(state) per channel.
  std::vector<ScalarField> decomposed_rhs(const ModelState& state,
                                          std::span<const double> theta) const;

  /// Largest explicit-Euler dt the guard admits; `budget` names the binding limit.
  virtual double stable_dt(const ModelState& state, std::span<const double> theta,
                           std::string* budget = nullptr) const = 0;

  /// Soft-range and runaway checks; throws DivergenceError past the hard guard.
  virtual void check_state(const ModelState& state) const;

  void require_theta(std::span<const double> theta) const;

 protected:
  Model(const Config& config, std::vector<std::string> params, std::vector<double> defaults);
  void add_channel(ChannelSpec spec) { channels_.push_back(std::move(spec)); }

  GridSpec grid_;
  Config config_;
  std::vector<std::string> param_names_;
  std::vector<double> true_params_;
  std::vector<double> param_scales_;
  std::vector<ChannelSpec> channels_;
  double c_stab_ = 0.2;
};

/// Builds the model named by the `model` key (heat, sintering, nanovoid).
std::unique_ptr<Model> make_model(const Config& config);

/// Stationary Gaussian laser 2 Gamma / (pi omega^2) exp(-r^2 / (2 omega^2)),
/// r the periodic minimum-image distance to (center_x, center_y) in cell units
/// scaled by dx. Throws DomainError unless gamma >= 0 and omega > 0.
ScalarField laser_flux(const GridSpec& grid, double gamma, double omega, double center_x,
                       double center_y);

/// h(phi) = phi^3 (15 - 10 phi + 6 phi^2) as printed for the sintering mobility,
/// or the usual interpolant phi^3 (10 - 15 phi + 6 phi^2).
enum class HForm { Printed, Standard };
double interp_h(double phi, HForm form = HForm::Printed);
ScalarField interp_h(const ScalarField& phi, HForm form = HForm::Printed);

/// 0.5 (1 - tanh(2 (r - radius) / width)), r the periodic distance to the center.
ScalarField circle_profile(const GridSpec& grid, double cx, double cy, double radius,
                           double width);

}  // namespace reel
