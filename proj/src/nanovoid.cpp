#include "reel/nanovoid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>

#include "reel/error.hpp"
#include "reel/rng.hpp"

namespace reel {

namespace {

Config nanovoid_defaults() {
  return Config::parse(R"(
model = nanovoid
nx = 64
ny = 64
dx = 1.0
dt = 0.01
cv_eq = 0.05
ci_eq = 0.0
interface_width = 3.0
noise_amp = 0.01
production = 0.001
production_eta = 0.0
source_seed = 7
theta.M_v = 1.0
theta.M_i = 2.0
theta.A_s = 1.0
theta.A_v = 1.0
theta.kappa_v = 1.0
theta.kappa_i = 1.0
theta.kappa_eta = 1.0
theta.L = 1.0
theta.R = 1.0
theta.s_v = 1.0
theta.s_i = 1.0
theta.s_eta = 1.0
)");
}

enum Param : std::size_t { kMv = 0, kMi, kAs, kAv, kKv, kKi, kKeta, kL, kR, kSv, kSi, kSeta, kCount };

std::atomic<bool> soft_range_reported{false};

struct Wells {
  ScalarField dv_s, dv_v;  // d(h fs)/dcv, d(j fv)/dcv
  ScalarField di_s, di_v;
  ScalarField de_s, de_v;  // d(h fs)/deta, d(j fv)/deta
};

Wells well_derivatives(const ScalarField& cv, const ScalarField& ci, const ScalarField& eta,
                       double cv_eq, double ci_eq) {
  const GridSpec& g = cv.grid();
  Wells w{ScalarField(g), ScalarField(g), ScalarField(g),
          ScalarField(g), ScalarField(g), ScalarField(g)};
  for (std::size_t n = 0; n < cv.size(); ++n) {
    const double e = eta[n];
    const double h = (e - 1.0) * (e - 1.0);
    const double j = e * e;
    const double a = cv[n] - cv_eq, b = ci[n] - ci_eq;
    const double fs = a * a + b * b;
    const double fv = (cv[n] - 1.0) * (cv[n] - 1.0) + ci[n] * ci[n];
    w.dv_s[n] = 2.0 * h * a;
    w.dv_v[n] = 2.0 * j * (cv[n] - 1.0);
    w.di_s[n] = 2.0 * h * b;
    w.di_v[n] = 2.0 * j * ci[n];
    w.de_s[n] = 2.0 * (e - 1.0) * fs;
    w.de_v[n] = 2.0 * e * fv;
  }
  return w;
}

}  // namespace

NanovoidModel::NanovoidModel(const Config& config)
    : Model(config.with_defaults(nanovoid_defaults()),
            {"M_v", "M_i", "A_s", "A_v", "kappa_v", "kappa_i", "kappa_eta", "L", "R", "s_v",
             "s_i", "s_eta"},
            {1.0, 2.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0}) {
  cv_eq_ = config_.get_double("cv_eq");
  ci_eq_ = config_.get_double("ci_eq");
  void_radius_ =
      config_.get_double("void_radius", static_cast<double>(grid_.nx) * grid_.dx / 6.0);
  interface_width_ = config_.get_double("interface_width") * grid_.dx;
  noise_amp_ = config_.get_double("noise_amp");
  production_ = config_.get_double("production");
  production_eta_ = config_.get_double("production_eta");
  source_seed_ = config_.get_u64("source_seed", 7);
  if (noise_amp_ < 0.0 || production_ < 0.0) {
    throw UsageError("noise_amp and production must be >= 0");
  }
  add_channel({"cv", {"lap_dfs_dcv", "lap_dfv_dcv", "-lap2_cv", "xi+pv", "-cv*ci"}, Routing::Vfdd});
  add_channel({"ci", {"lap_dfs_dci", "lap_dfv_dci", "-lap2_ci", "zeta+pi", "-cv*ci"}, Routing::Vfdd});
  add_channel({"eta", {"-dfs_deta", "-dfv_deta", "lap_eta", "peta"}, Routing::Vfdd});
}

std::vector<std::string> NanovoidModel::state_fields() const {
  return {"cv", "ci", "eta", "xi", "zeta", "pv", "pi", "peta"};
}

ModelState NanovoidModel::initial_state(std::uint64_t seed) const {
  Xoshiro256 rng(derive_seed(seed, 3));
  const double cx = static_cast<double>(grid_.nx) / 2.0 + (rng.uniform() - 0.5) * 4.0;
  const double cy = static_cast<double>(grid_.ny) / 2.0 + (rng.uniform() - 0.5) * 4.0;
  const double radius = void_radius_ * (0.9 + 0.2 * rng.uniform());
  ScalarField eta = circle_profile(grid_, cx, cy, radius, interface_width_);
  ScalarField cv(grid_);
  for (std::size_t n = 0; n < cv.size(); ++n) cv[n] = cv_eq_ + (1.0 - cv_eq_) * eta[n];
  ModelState s;
  s.set("cv", std::move(cv));
  s.set("ci", ScalarField(grid_, ci_eq_));
  s.set("eta", std::move(eta));
  refresh_sources(s);
  return s;
}

void NanovoidModel::refresh_sources(ModelState& state) const {
  const std::uint64_t base = derive_seed(source_seed_, state.step);
  auto noise = [&](std::uint64_t label) {
    ScalarField f(grid_);
    if (noise_amp_ == 0.0) return f;
    NormalStream ns(derive_seed(base, label));
    for (double& v : f.values()) v = noise_amp_ * ns.next();
    return f;
  };
  auto production = [&](std::uint64_t label, double rate) {
    ScalarField f(grid_);
    if (rate == 0.0) return f;
    Xoshiro256 rng(derive_seed(base, label));
    for (double& v : f.values()) v = 2.0 * rate * rng.uniform();
    return f;
  };
  state.set("xi", noise(0));
  state.set("zeta", noise(1));
  state.set("pv", production(2, production_));
  state.set("pi", production(3, production_));
  state.set("peta", production(4, production_eta_));
}

std::vector<std::vector<ScalarField>> NanovoidModel::features(const ModelState& state) const {
  const ScalarField& cv = state.at("cv");
  const ScalarField& ci = state.at("ci");
  const ScalarField& eta = state.at("eta");
  const Wells w = well_derivatives(cv, ci, eta, cv_eq_, ci_eq_);
  const ScalarField recomb = -1.0 * (cv * ci);
  return {
      {laplacian(w.dv_s), laplacian(w.dv_v), -1.0 * laplacian(laplacian(cv)),
       state.at("xi") + state.at("pv"), recomb},
      {laplacian(w.di_s), laplacian(w.di_v), -1.0 * laplacian(laplacian(ci)),
       state.at("zeta") + state.at("pi"), recomb},
      {-1.0 * w.de_s, -1.0 * w.de_v, laplacian(eta), state.at("peta")},
  };
}

ParamFunctions NanovoidModel::param_functions(std::span<const double> theta) const {
  require_theta(theta);
  const std::size_t P = kCount;
  ParamFunctions pf;
  auto conc = [&](std::size_t m, std::size_t kappa, std::size_t s) {
    const double M = theta[m];
    std::vector<double> j(5 * P, 0.0);
    j[0 * P + m] = theta[kAs];
    j[0 * P + kAs] = M;
    j[1 * P + m] = theta[kAv];
    j[1 * P + kAv] = M;
    j[2 * P + m] = theta[kappa];
    j[2 * P + kappa] = M;
    j[3 * P + s] = 1.0;
    j[4 * P + kR] = 1.0;
    pf.values.push_back({M * theta[kAs], M * theta[kAv], M * theta[kappa], theta[s], theta[kR]});
    pf.jacobian.push_back(std::move(j));
  };
  conc(kMv, kKv, kSv);
  conc(kMi, kKi, kSi);
  const double L = theta[kL];
  std::vector<double> j(4 * P, 0.0);
  j[0 * P + kL] = theta[kAs];
  j[0 * P + kAs] = L;
  j[1 * P + kL] = theta[kAv];
  j[1 * P + kAv] = L;
  j[2 * P + kL] = theta[kKeta];
  j[2 * P + kKeta] = L;
  j[3 * P + kSeta] = 1.0;
  pf.values.push_back({L * theta[kAs], L * theta[kAv], L * theta[kKeta], theta[kSeta]});
  pf.jacobian.push_back(std::move(j));
  return pf;
}

std::vector<ScalarField> NanovoidModel::rhs(const ModelState& state,
                                            std::span<const double> theta) const {
  require_theta(theta);
  const ScalarField& cv = state.at("cv");
  const ScalarField& ci = state.at("ci");
  const ScalarField& eta = state.at("eta");
  const Wells w = well_derivatives(cv, ci, eta, cv_eq_, ci_eq_);
  const double As = theta[kAs], Av = theta[kAv];

  auto conc = [&](const ScalarField& c, const ScalarField& ds, const ScalarField& dv, double M,
                  double kappa, const ScalarField& src, double s) {
    const ScalarField lap_c = laplacian(c);
    ScalarField mu(grid_);
    for (std::size_t n = 0; n < mu.size(); ++n) mu[n] = As * ds[n] + Av * dv[n] - kappa * lap_c[n];
    const ScalarField lap_mu = laplacian(mu);
    ScalarField r(grid_);
    for (std::size_t n = 0; n < r.size(); ++n) {
      r[n] = M * lap_mu[n] + s * src[n] - theta[kR] * cv[n] * ci[n];
    }
    return r;
  };
  std::vector<ScalarField> out;
  out.push_back(conc(cv, w.dv_s, w.dv_v, theta[kMv], theta[kKv], state.at("xi") + state.at("pv"),
                     theta[kSv]));
  out.push_back(conc(ci, w.di_s, w.di_v, theta[kMi], theta[kKi],
                     state.at("zeta") + state.at("pi"), theta[kSi]));
  const ScalarField lap_eta = laplacian(eta);
  const ScalarField& peta = state.at("peta");
  ScalarField re(grid_);
  for (std::size_t n = 0; n < re.size(); ++n) {
    re[n] = -theta[kL] * (As * w.de_s[n] + Av * w.de_v[n] - theta[kKeta] * lap_eta[n]) +
            theta[kSeta] * peta[n];
  }
  out.push_back(std::move(re));
  return out;
}

double NanovoidModel::stable_dt(const ModelState& state, std::span<const double> theta,
                                std::string* budget) const {
  require_theta(theta);
  const double dx2 = grid_.dx * grid_.dx;
  double hmax = 0.0, jmax = 0.0;
  for (double e : state.at("eta").values()) {
    hmax = std::max(hmax, (e - 1.0) * (e - 1.0));
    jmax = std::max(jmax, e * e);
  }
  const double well = 2.0 * (std::abs(theta[kAs]) * hmax + std::abs(theta[kAv]) * jmax);
  struct Limit {
    double dt;
    std::string what;
  };
  std::vector<Limit> limits;
  const char* names[2] = {"cv", "ci"};
  const std::size_t mob[2] = {kMv, kMi};
  const std::size_t kap[2] = {kKv, kKi};
  for (int c = 0; c < 2; ++c) {
    const double M = std::abs(theta[mob[c]]);
    limits.push_back({c_stab_ * dx2 * dx2 / (8.0 * M * std::abs(theta[kap[c]])),
                      std::string("Cahn-Hilliard ") + names[c] +
                          ": dt <= c_stab dx^4 / (8 M kappa)"});
    limits.push_back({c_stab_ * dx2 / (M * well),
                      std::string("Cahn-Hilliard ") + names[c] + ": dt <= c_stab dx^2 / (M f'')"});
  }
  limits.push_back({c_stab_ * dx2 / std::abs(theta[kL] * theta[kKeta]),
                    "Allen-Cahn eta: dt <= c_stab dx^2 / (L kappa_eta)"});
  const Limit* best = nullptr;
  for (const Limit& l : limits) {
    if (!std::isfinite(l.dt)) continue;
    if (!best || l.dt < best->dt) best = &l;
  }
  if (!best) {
    if (budget) *budget = "no active stiffness";
    return INFINITY;
  }
  if (budget) *budget = best->what;
  return best->dt;
}

void NanovoidModel::check_state(const ModelState& state) const {
  Model::check_state(state);
  for (const char* name : {"cv", "ci", "eta"}) {
    const ScalarField& f = state.at(name);
    double lo = INFINITY, hi = -INFINITY;
    for (double v : f.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (lo < -10.0 || hi > 10.0) {
      throw DivergenceError(std::string("field ") + name + " left [-10, 10] at step " +
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
