#include "reel/sintering.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>

#include "reel/error.hpp"
#include "reel/heat.hpp"
#include "reel/rng.hpp"

namespace reel {

namespace {

Config sintering_defaults() {
  return Config::parse(R"(
model = sintering
nx = 64
ny = 64
dx = 1.0
dt = 0.01
grains = 2
taylor_order = 4
kB = 1.0
Vm = 1.0
T0 = 1.0
h_form = printed
exact_mobility = true
interface_width = 3.0
laser_power = 10.0
laser_radius = 8.0
theta.k = 0.5
theta.rhoCp = 1.0
theta.A = 16.0
theta.B = 1.0
theta.eps_phi = 4.0
theta.eps_eta = 2.0
theta.L = 1.0
theta.D_vol0 = 0.01
theta.Q_vol = 1.0
theta.D_vap0 = 0.001
theta.Q_vap = 0.8
theta.D_surf0 = 0.04
theta.Q_surf = 0.5
theta.D_GB0 = 0.02
theta.Q_GB = 0.7
)");
}

enum Param : std::size_t {
  pK = 0, pRhoCp, pA, pB, pEpsPhi, pEpsEta, pL,
  pDvol, pQvol, pDvap, pQvap, pDsurf, pQsurf, pDgb, pQgb, pParamCount
};

constexpr std::size_t kPotentialParts = 3;  // A, B, eps_phi

std::size_t d0_index(std::size_t mode) { return pDvol + 2 * mode; }
std::size_t q_index(std::size_t mode) { return pQvol + 2 * mode; }

struct EtaSums {
  ScalarField s1, s2, s3;
};

EtaSums eta_sums(const ModelState& state, std::size_t grains) {
  const GridSpec& g = state.at("phi").grid();
  EtaSums s{ScalarField(g), ScalarField(g), ScalarField(g)};
  for (std::size_t k = 0; k < grains; ++k) {
    const ScalarField& eta = state.at(eta_name(k));
    for (std::size_t n = 0; n < eta.size(); ++n) {
      const double e = eta[n];
      s.s1[n] += e;
      s.s2[n] += e * e;
      s.s3[n] += e * e * e;
    }
  }
  return s;
}

// df/dphi split by coefficient: A part and B part.
void potential_parts(const ScalarField& phi, const EtaSums& sums, ScalarField& gA,
                     ScalarField& gB) {
  for (std::size_t n = 0; n < phi.size(); ++n) {
    const double p = phi[n];
    gA[n] = 2.0 * p * (1.0 - p) * (1.0 - 2.0 * p);
    gB[n] = 2.0 * p - 6.0 * sums.s2[n] + 4.0 * sums.s3[n];
  }
}

// df/deta_k divided by B.
ScalarField eta_drive(const ScalarField& phi, const ScalarField& eta, const EtaSums& sums) {
  ScalarField out(phi.grid());
  for (std::size_t n = 0; n < phi.size(); ++n) {
    const double p = phi[n], e = eta[n];
    out[n] = 12.0 * ((1.0 - p) * e - (2.0 - p) * e * e + e * sums.s2[n]);
  }
  return out;
}

std::atomic<bool> soft_range_reported{false};

}  // namespace

std::string eta_name(std::size_t g) { return "eta" + std::to_string(g + 1); }

ScalarField sintering_chemical_potential(const ModelState& state, std::size_t grains,
                                         double eps_phi, const FreeEnergyParams& fe) {
  const ScalarField& phi = state.at("phi");
  const EtaSums sums = eta_sums(state, grains);
  ScalarField gA(phi.grid()), gB(phi.grid());
  potential_parts(phi, sums, gA, gB);
  const ScalarField lap = laplacian(phi);
  ScalarField mu(phi.grid());
  for (std::size_t n = 0; n < mu.size(); ++n) mu[n] = fe.A * gA[n] + fe.B * gB[n] - eps_phi * lap[n];
  return mu;
}

ScalarField sintering_bulk_energy(const ModelState& state, std::size_t grains,
                                  const FreeEnergyParams& fe) {
  const ScalarField& phi = state.at("phi");
  const EtaSums sums = eta_sums(state, grains);
  ScalarField f(phi.grid());
  for (std::size_t n = 0; n < f.size(); ++n) {
    const double p = phi[n];
    const double s2 = sums.s2[n], s3 = sums.s3[n];
    f[n] = fe.A * p * p * (1.0 - p) * (1.0 - p) +
           fe.B * (p * p + 6.0 * (1.0 - p) * s2 - 4.0 * (2.0 - p) * s3 + 3.0 * s2 * s2);
  }
  return f;
}

SinteringModel::SinteringModel(const Config& config)
    : Model(config.with_defaults(sintering_defaults()),
            {"k", "rhoCp", "A", "B", "eps_phi", "eps_eta", "L", "D_vol0", "Q_vol", "D_vap0",
             "Q_vap", "D_surf0", "Q_surf", "D_GB0", "Q_GB"},
            {0.5, 1.0, 16.0, 1.0, 4.0, 2.0, 1.0, 0.01, 1.0, 0.001, 0.8, 0.04, 0.5, 0.02, 0.7}) {
  const long long grains = config_.get_int("grains", 2);
  if (grains < 1) throw UsageError("sintering needs at least one grain");
  grains_ = static_cast<std::size_t>(grains);
  order_ = static_cast<int>(config_.get_int("taylor_order", 4));
  if (order_ < 0) throw UsageError("taylor_order must be >= 0");
  kB_ = config_.get_double("kB");
  Vm_ = config_.get_double("Vm");
  if (!(kB_ > 0.0)) throw UsageError("kB must be > 0");
  T0_ = config_.get_double("T0");
  particle_radius_ =
      config_.get_double("particle_radius", static_cast<double>(grid_.nx) * grid_.dx / 5.0);
  interface_width_ = config_.get_double("interface_width") * grid_.dx;
  exact_mobility_ = config_.get_bool("exact_mobility", true);
  const std::string form = config_.get_string("h_form");
  if (form == "printed") {
    h_form_ = HForm::Printed;
  } else if (form == "standard") {
    h_form_ = HForm::Standard;
  } else {
    throw UsageError("h_form must be printed or standard, got " + form);
  }
  laser_ = laser_flux(grid_, config_.get_double("laser_power"), config_.get_double("laser_radius"),
                      config_.get_double("laser_x", static_cast<double>(grid_.nx) / 2.0),
                      config_.get_double("laser_y", static_cast<double>(grid_.ny) / 2.0));

  static const char* kModeNames[kModes] = {"vol", "vap", "surf", "GB"};
  static const char* kPartNames[kPotentialParts] = {"A", "B", "eps"};
  ChannelSpec phi{"phi", {}, Routing::ValueOnly};
  for (std::size_t l = 0; l < kModes; ++l) {
    for (int i = 0; i <= order_; ++i) {
      for (std::size_t g = 0; g < kPotentialParts; ++g) {
        phi.features.push_back(std::string("M_") + kModeNames[l] + "_T" + std::to_string(i) +
                               "_mu" + kPartNames[g]);
      }
    }
  }
  add_channel(std::move(phi));
  for (std::size_t g = 0; g < grains_; ++g) {
    add_channel({eta_name(g), {"-df_deta/B", "lap_eta"}, Routing::ValueOnly});
  }
  add_channel({"T", {"lap_T", "Q"}, Routing::FrequencyOnly});
}

std::vector<std::string> SinteringModel::state_fields() const {
  std::vector<std::string> names{"phi"};
  for (std::size_t g = 0; g < grains_; ++g) names.push_back(eta_name(g));
  names.push_back("T");
  return names;
}

ModelState SinteringModel::initial_state(std::uint64_t seed) const {
  Xoshiro256 rng(derive_seed(seed, 2));
  const double cx0 = static_cast<double>(grid_.nx) / 2.0;
  const double cy0 = static_cast<double>(grid_.ny) / 2.0;
  const double spacing = 0.95 * particle_radius_ / grid_.dx;
  ModelState s;
  ScalarField solid_gap(grid_, 1.0);  // prod (1 - eta_g)
  std::vector<ScalarField> etas;
  for (std::size_t g = 0; g < grains_; ++g) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(g) /
                         static_cast<double>(grains_);
    const double offset = grains_ == 1 ? 0.0 : spacing;
    const double cx = cx0 + offset * std::cos(angle) + (rng.uniform() - 0.5) * 2.0;
    const double cy = cy0 + offset * std::sin(angle) + (rng.uniform() - 0.5) * 2.0;
    const double radius = particle_radius_ * (0.92 + 0.16 * rng.uniform());
    etas.push_back(circle_profile(grid_, cx, cy, radius, interface_width_));
    for (std::size_t n = 0; n < solid_gap.size(); ++n) solid_gap[n] *= 1.0 - etas.back()[n];
  }
  ScalarField phi(grid_);
  for (std::size_t n = 0; n < phi.size(); ++n) phi[n] = 1.0 - solid_gap[n];
  s.set("phi", std::move(phi));
  for (std::size_t g = 0; g < grains_; ++g) s.set(eta_name(g), std::move(etas[g]));
  s.set("T", ScalarField(grid_, T0_));
  return s;
}

std::vector<ScalarField> SinteringModel::carriers(const ModelState& state) const {
  const ScalarField& phi = state.at("phi");
  const EtaSums sums = eta_sums(state, grains_);
  std::vector<ScalarField> c(kModes, ScalarField(grid_));
  for (std::size_t n = 0; n < phi.size(); ++n) {
    const double p = phi[n];
    const double h = interp_h(p, h_form_);
    c[0][n] = h;
    c[1][n] = 1.0 - h;
    c[2][n] = p * (1.0 - p);
    c[3][n] = sums.s1[n] * sums.s1[n] - sums.s2[n];
  }
  return c;
}

std::vector<std::vector<ScalarField>> SinteringModel::features(const ModelState& state) const {
  const ScalarField& phi = state.at("phi");
  const ScalarField& T = state.at("T");
  const EtaSums sums = eta_sums(state, grains_);

  std::vector<ScalarField> parts(kPotentialParts, ScalarField(grid_));
  potential_parts(phi, sums, parts[0], parts[1]);
  parts[2] = -1.0 * laplacian(phi);

  const ArrheniusTerm series(order_, kB_, Vm_);
  const std::vector<ScalarField> carrier = carriers(state);
  const std::size_t terms = static_cast<std::size_t>(order_) + 1;

  std::vector<ScalarField> scale(terms, ScalarField(grid_));
  {
    std::vector<double> s(terms);
    for (std::size_t n = 0; n < T.size(); ++n) {
      series.feature_scales(T[n], s.data());
      for (std::size_t i = 0; i < terms; ++i) scale[i][n] = s[i];
    }
  }

  std::vector<std::vector<ScalarField>> out;
  std::vector<ScalarField> phi_feats(kModes * terms * kPotentialParts);
  // Each (mode, order) mobility m = c_l s_i(T) is combined with every potential part.
#pragma omp parallel for collapse(2) schedule(dynamic)
  for (std::size_t l = 0; l < kModes; ++l) {
    for (std::size_t i = 0; i < terms; ++i) {
      ScalarField m(grid_);
      for (std::size_t n = 0; n < m.size(); ++n) m[n] = carrier[l][n] * scale[i][n];
      for (std::size_t g = 0; g < kPotentialParts; ++g) {
        phi_feats[(l * terms + i) * kPotentialParts + g] = div_flux(m, parts[g]);
      }
    }
  }
  out.push_back(std::move(phi_feats));

  for (std::size_t g = 0; g < grains_; ++g) {
    const ScalarField& eta = state.at(eta_name(g));
    out.push_back({-1.0 * eta_drive(phi, eta, sums), laplacian(eta)});
  }
  out.push_back(heat_features(T, laser_));
  return out;
}

ParamFunctions SinteringModel::param_functions(std::span<const double> theta) const {
  require_theta(theta);
  const std::size_t P = pParamCount;
  const std::size_t terms = static_cast<std::size_t>(order_) + 1;
  const std::size_t part_param[kPotentialParts] = {pA, pB, pEpsPhi};
  ParamFunctions pf;

  const std::size_t nphi = kModes * terms * kPotentialParts;
  std::vector<double> v(nphi), jac(nphi * P, 0.0);
  for (std::size_t l = 0; l < kModes; ++l) {
    const double D = theta[d0_index(l)];
    const double Q = theta[q_index(l)];
    for (std::size_t i = 0; i < terms; ++i) {
      const double qi = std::pow(Q, static_cast<double>(i));
      const double dqi = i == 0 ? 0.0 : static_cast<double>(i) * std::pow(Q, static_cast<double>(i) - 1);
      for (std::size_t g = 0; g < kPotentialParts; ++g) {
        const std::size_t row = (l * terms + i) * kPotentialParts + g;
        const double tg = theta[part_param[g]];
        v[row] = D * qi * tg;
        jac[row * P + d0_index(l)] = qi * tg;
        jac[row * P + q_index(l)] = D * dqi * tg;
        jac[row * P + part_param[g]] = D * qi;
      }
    }
  }
  pf.values.push_back(std::move(v));
  pf.jacobian.push_back(std::move(jac));

  const double L = theta[pL], B = theta[pB], eps_eta = theta[pEpsEta];
  for (std::size_t g = 0; g < grains_; ++g) {
    std::vector<double> j(2 * P, 0.0);
    j[0 * P + pL] = B;
    j[0 * P + pB] = L;
    j[1 * P + pL] = eps_eta;
    j[1 * P + pEpsEta] = L;
    pf.values.push_back({L * B, L * eps_eta});
    pf.jacobian.push_back(std::move(j));
  }

  const double k = theta[pK], c = theta[pRhoCp];
  std::vector<double> jt(2 * P, 0.0);
  jt[0 * P + pK] = 1.0 / c;
  jt[0 * P + pRhoCp] = -k / (c * c);
  jt[1 * P + pRhoCp] = -1.0 / (c * c);
  pf.values.push_back({k / c, 1.0 / c});
  pf.jacobian.push_back(std::move(jt));
  return pf;
}

std::vector<ScalarField> SinteringModel::mode_prefactors(const ModelState& state,
                                                         std::span<const double> theta) const {
  require_theta(theta);
  const ScalarField& T = state.at("T");
  std::vector<ScalarField> c = carriers(state);
  for (std::size_t l = 0; l < kModes; ++l) {
    const double D = theta[d0_index(l)];
    for (std::size_t n = 0; n < T.size(); ++n) c[l][n] *= D * Vm_ / (kB_ * T[n]);
  }
  return c;
}

ScalarField SinteringModel::mobility(const ModelState& state, std::span<const double> theta,
                                     bool exact) const {
  require_theta(theta);
  const ScalarField& T = state.at("T");
  const std::vector<ScalarField> c = carriers(state);
  const ArrheniusTerm series(order_, kB_, Vm_);
  ScalarField m(grid_);
  for (std::size_t l = 0; l < kModes; ++l) {
    const double D = theta[d0_index(l)];
    const double Q = theta[q_index(l)];
    for (std::size_t n = 0; n < m.size(); ++n) {
      const double rate = exact ? series.exact(D, Q, T[n]) : series.truncated(D, Q, T[n]);
      m[n] += rate * c[l][n];
    }
  }
  return m;
}

double SinteringModel::max_arrhenius_argument(const ModelState& state,
                                              std::span<const double> theta) const {
  require_theta(theta);
  const ScalarField& T = state.at("T");
  double tmin = INFINITY;
  for (double t : T.values()) tmin = std::min(tmin, t);
  double qmax = 0.0;
  for (std::size_t l = 0; l < kModes; ++l) qmax = std::max(qmax, theta[q_index(l)]);
  return qmax / (kB_ * tmin);
}

std::vector<ScalarField> SinteringModel::rhs(const ModelState& state,
                                             std::span<const double> theta) const {
  require_theta(theta);
  const ScalarField& phi = state.at("phi");
  const EtaSums sums = eta_sums(state, grains_);
  std::vector<ScalarField> out;

  const FreeEnergyParams fe{theta[pA], theta[pB]};
  const ScalarField mu = sintering_chemical_potential(state, grains_, theta[pEpsPhi], fe);
  out.push_back(div_flux(mobility(state, theta, exact_mobility_), mu));

  const double L = theta[pL];
  for (std::size_t g = 0; g < grains_; ++g) {
    const ScalarField& eta = state.at(eta_name(g));
    const ScalarField drive = eta_drive(phi, eta, sums);
    const ScalarField lap = laplacian(eta);
    ScalarField r(grid_);
    for (std::size_t n = 0; n < r.size(); ++n) {
      r[n] = -L * (theta[pB] * drive[n] - theta[pEpsEta] * lap[n]);
    }
    out.push_back(std::move(r));
  }

  const ScalarField lapT = laplacian(state.at("T"));
  ScalarField rT(grid_);
  for (std::size_t n = 0; n < rT.size(); ++n) {
    rT[n] = (theta[pK] * lapT[n] + laser_[n]) / theta[pRhoCp];
  }
  out.push_back(std::move(rT));
  return out;
}

double SinteringModel::stable_dt(const ModelState& state, std::span<const double> theta,
                                 std::string* budget) const {
  require_theta(theta);
  const double dx2 = grid_.dx * grid_.dx;
  double mmax = 0.0;
  {
    const ScalarField& T = state.at("T");
    const std::vector<ScalarField> c = carriers(state);
    const ArrheniusTerm series(order_, kB_, Vm_);
    for (std::size_t n = 0; n < T.size(); ++n) {
      double exact = 0.0, trunc = 0.0;
      for (std::size_t l = 0; l < kModes; ++l) {
        const double D = theta[d0_index(l)], Q = theta[q_index(l)];
        exact += series.exact(D, Q, T[n]) * c[l][n];
        trunc += series.truncated(D, Q, T[n]) * c[l][n];
      }
      mmax = std::max({mmax, std::abs(exact), std::abs(trunc)});
    }
  }
  struct Limit {
    double dt;
    const char* what;
  };
  const double curvature = 2.0 * std::abs(theta[pA]) + 2.0 * std::abs(theta[pB]);
  const double diffusivity = std::abs(theta[pK] / theta[pRhoCp]);
  const double ac = std::abs(theta[pL] * theta[pEpsEta]);
  const Limit limits[] = {
      {c_stab_ * dx2 * dx2 / (8.0 * mmax * std::abs(theta[pEpsPhi])),
       "Cahn-Hilliard phi: dt <= c_stab dx^4 / (8 max|M| eps_phi)"},
      {c_stab_ * dx2 / (mmax * curvature),
       "Cahn-Hilliard phi: dt <= c_stab dx^2 / (max|M| (2A + 2B))"},
      {c_stab_ * dx2 / ac, "Allen-Cahn eta: dt <= c_stab dx^2 / (L eps_eta)"},
      {c_stab_ * dx2 / diffusivity, "heat T: dt <= c_stab dx^2 / (k / rhoCp)"},
  };
  const Limit* best = &limits[0];
  for (const Limit& l : limits) {
    if (std::isfinite(l.dt) && (!std::isfinite(best->dt) || l.dt < best->dt)) best = &l;
  }
  if (budget) *budget = best->what;
  return best->dt;
}

void SinteringModel::check_state(const ModelState& state) const {
  Model::check_state(state);
  for (std::size_t k = 0; k < grains_ + 1; ++k) {
    const std::string name = k == 0 ? "phi" : eta_name(k - 1);
    const ScalarField& f = state.at(name);
    double lo = INFINITY, hi = -INFINITY;
    for (double v : f.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo < -10.0 || hi > 10.0) {
      throw DivergenceError("field " + name + " left [-10, 10] at step " +
                                std::to_string(state.step),
                            state.step);
    }
    if ((lo < -0.1 || hi > 1.1) && !soft_range_reported.exchange(true)) {
      std::clog << "warning: field " << name << " outside [-0.1, 1.1] at step " << state.step
                << "\n";
    }
  }
}

}  // namespace reel
