#include <doctest.h>

#include <cmath>
#include <numbers>

#include "reel/error.hpp"
#include "reel/heat.hpp"
#include "reel/reference.hpp"
#include "reel/nanovoid.hpp"
#include "reel/rng.hpp"
#include "reel/sintering.hpp"
#include "support.hpp"

using namespace reel;

namespace {

std::unique_ptr<Model> small(const std::string& name, const std::string& extra = "") {
  return make_model(Config::parse("model = " + name + "\nnx = 16\nny = 16\n" + extra));
}

std::vector<double> jitter(const Model& m, std::uint64_t seed) {
  Xoshiro256 rng(seed);
  std::vector<double> th = m.true_params();
  for (double& v : th) v *= 0.6 + 0.8 * rng.uniform();
  return th;
}

// state perturbed away from the smooth initial condition
ModelState rough_state(const Model& m, std::uint64_t seed) {
  ModelState s = m.initial_state(seed);
  const auto evolving = m.channels();
  Xoshiro256 rng(seed + 100);
  for (const auto& ch : evolving) {
    for (double& v : s.at(ch.field).values()) v += 0.05 * (rng.uniform() - 0.5);
  }
  return s;
}

}  // namespace

TEST_CASE("make_model dispatches by name") {
  CHECK(small("heat")->name() == "heat");
  CHECK(small("sintering")->name() == "sintering");
  CHECK(small("nanovoid")->name() == "nanovoid");
  CHECK_THROWS_AS(small("ising"), UsageError);
  CHECK_THROWS_AS(small("sintering", "h_form = bogus\n"), UsageError);
  CHECK_THROWS_AS(small("sintering", "grains = 0\n"), UsageError);
}

TEST_CASE("parameter names and config overrides") {
  auto m = small("heat", "theta.k = 0.25\n");
  CHECK(m->param_names() == std::vector<std::string>{"k", "rhoCp"});
  CHECK(m->true_params()[0] == 0.25);
  CHECK(m->param_index("rhoCp") == 1);
  CHECK_THROWS_AS(m->param_index("nope"), UsageError);
  CHECK_THROWS_AS(m->require_theta(std::vector<double>{1.0}), UsageError);
  auto s = small("sintering");
  CHECK(s->param_count() == 15);
  CHECK(s->channels().size() == 4);  // phi, eta1, eta2, T
  CHECK(s->channels()[0].features.size() == 4 * 5 * 3);
  CHECK(s->channels()[0].routing == Routing::ValueOnly);
  CHECK(s->channels()[3].routing == Routing::FrequencyOnly);
  auto nv = small("nanovoid");
  CHECK(nv->param_count() == 12);
  for (const auto& ch : nv->channels()) CHECK(ch.routing == Routing::Vfdd);
}

TEST_CASE("laser peak and integral") {
  const double gamma = 3.0, omega = 4.0;
  GridSpec g(128, 128, 0.5, 0.1);
  ScalarField q = laser_flux(g, gamma, omega, 64.0, 64.0);
  CHECK(q(64, 64) == doctest::Approx(2 * gamma / (std::numbers::pi * omega * omega)));
  // quadrature of 2 Gamma/(pi w^2) exp(-r^2/(2 w^2)) over the plane is 4 Gamma
  CHECK(sum(q) * g.dx * g.dx == doctest::Approx(4 * gamma).epsilon(1e-6));
  CHECK_THROWS_AS(laser_flux(g, -1.0, 1.0, 0, 0), DomainError);
  CHECK_THROWS_AS(laser_flux(g, 1.0, 0.0, 0, 0), DomainError);
}

TEST_CASE("interpolation polynomial values") {
  CHECK(interp_h(0.0) == 0.0);
  CHECK(interp_h(1.0) == doctest::Approx(11.0));
  CHECK(interp_h(0.5) == doctest::Approx(0.125 * (15 - 5 + 1.5)));
  CHECK(interp_h(1.0, HForm::Standard) == doctest::Approx(1.0));
  CHECK(interp_h(0.5, HForm::Standard) == doctest::Approx(0.5));
}

TEST_CASE("chemical potential is the discrete functional derivative") {
  auto m = small("sintering");
  const auto& sm = dynamic_cast<const SinteringModel&>(*m);
  ModelState s = rough_state(*m, 3);
  const FreeEnergyParams fe{16.0, 1.0};
  const double eps = 4.0, dx = m->grid().dx;
  auto energy = [&](const ModelState& st) {
    ScalarField f = sintering_bulk_energy(st, 2, fe);
    const ScalarField& p = st.at("phi");
    const GridSpec& g = p.grid();
    double E = 0.0;
    for (std::size_t i = 0; i < g.nx; ++i)
      for (std::size_t j = 0; j < g.ny; ++j) {
        const double ax = p((i + 1) % g.nx, j) - p(i, j);
        const double ay = p(i, (j + 1) % g.ny) - p(i, j);
        E += f(i, j) + 0.5 * eps * (ax * ax + ay * ay) / (dx * dx);
      }
    return E;
  };
  ScalarField mu = sintering_chemical_potential(s, sm.grains(), eps, fe);
  const double h = 1e-5;
  for (std::size_t k : {0u, 37u, 100u, 255u}) {
    ModelState sp = s, sm2 = s;
    sp.at("phi")[k] += h;
    sm2.at("phi")[k] -= h;
    const double fd = (energy(sp) - energy(sm2)) / (2 * h);
    CHECK(mu[k] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("eta drive is the derivative of the bulk energy") {
  auto m = small("sintering", "grains = 3\n");
  ModelState s = rough_state(*m, 4);
  const FreeEnergyParams fe{0.0, 1.0};
  auto feats = m->features(s);
  const double h = 1e-6;
  for (std::size_t g = 0; g < 3; ++g) {
    for (std::size_t k : {5u, 120u}) {
      ModelState a = s, b = s;
      a.at(eta_name(g))[k] += h;
      b.at(eta_name(g))[k] -= h;
      const double fd =
          (sintering_bulk_energy(a, 3, fe)[k] - sintering_bulk_energy(b, 3, fe)[k]) / (2 * h);
      CHECK(-feats[1 + g][0][k] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("decomposed right-hand side equals the monolithic one") {
  for (std::string name : {"heat", "sintering", "nanovoid"}) {
    // sintering compared with the truncated mobility, which the features carry exactly
    auto m = small(name, name == "sintering" ? "exact_mobility = false\n" : "");
    ModelState s = rough_state(*m, 5);
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      auto th = jitter(*m, seed);
      auto a = m->rhs(s, th);
      auto b = m->decomposed_rhs(s, th);
      REQUIRE(a.size() == b.size());
      for (std::size_t c = 0; c < a.size(); ++c) {
        const double scale = std::max(max_abs(a[c]), 1e-300);
        CHECK(testing::max_abs_diff(a[c], b[c]) <= 1e-11 * scale);
      }
    }
  }
}

TEST_CASE("parameter-function jacobians match finite differences") {
  for (std::string name : {"heat", "sintering", "nanovoid"}) {
    auto m = small(name);
    const std::size_t P = m->param_count();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      auto th = jitter(*m, 50 + seed);
      ParamFunctions pf = m->param_functions(th);
      for (std::size_t p = 0; p < P; ++p) {
        const double h = 1e-6 * std::max(1.0, std::abs(th[p]));
        auto tp = th, tm = th;
        tp[p] += h;
        tm[p] -= h;
        auto fp = m->param_functions(tp), fm = m->param_functions(tm);
        for (std::size_t c = 0; c < pf.values.size(); ++c)
          for (std::size_t i = 0; i < pf.values[c].size(); ++i) {
            const double fd = (fp.values[c][i] - fm.values[c][i]) / (2 * h);
            CHECK(pf.jacobian[c][i * P + p] ==
                  doctest::Approx(fd).epsilon(1e-6).scale(std::abs(pf.values[c][i]) + 1e-12));
          }
      }
    }
  }
}

TEST_CASE("truncated mobility error is within the series remainder") {
  auto m = small("sintering");
  const auto& sm = dynamic_cast<const SinteringModel&>(*m);
  ModelState s = m->initial_state(1);
  const auto& th = m->true_params();
  ScalarField exact = sm.mobility(s, th, true), trunc = sm.mobility(s, th, false);
  const double x = sm.max_arrhenius_argument(s, th);
  auto pre = sm.mode_prefactors(s, th);
  for (std::size_t n = 0; n < exact.size(); ++n) {
    double bound = 0.0;
    for (const auto& p : pre) bound += std::abs(p[n]);
    bound *= std::pow(x, 5) / 120.0;
    CHECK(std::abs(exact[n] - trunc[n]) <= bound * (1 + 1e-12) + 1e-300);
  }
}

TEST_CASE("sintering stability budget is named") {
  auto m = small("sintering", "dt = 5.0\n");
  ModelState s = m->initial_state(1);
  std::string budget;
  const double dt = m->stable_dt(s, m->true_params(), &budget);
  CHECK(dt < 5.0);
  CHECK_FALSE(budget.empty());
}

TEST_CASE("nanovoid uniform matrix state is an equilibrium without sources") {
  auto m = small("nanovoid", "noise_amp = 0\nproduction = 0\n");
  const auto& nv = dynamic_cast<const NanovoidModel&>(*m);
  CHECK_FALSE(nv.sources_enabled());
  ModelState s = m->initial_state(1);
  s.at("cv") = ScalarField(m->grid(), nv.cv_eq());
  s.at("ci") = ScalarField(m->grid(), nv.ci_eq());
  s.at("eta") = ScalarField(m->grid(), 0.0);
  for (const auto& r : m->rhs(s, m->true_params())) CHECK(max_abs(r) < 1e-14);
}

TEST_CASE("nanovoid sources are seeded per step") {
  auto m = small("nanovoid");
  ModelState a = m->initial_state(1), b = m->initial_state(1);
  CHECK(a == b);
  ModelState c = a;
  c.step = 1;
  m->refresh_sources(c);
  CHECK_FALSE(c.at("xi") == a.at("xi"));
  for (double v : a.at("pv").values()) CHECK((v >= 0.0 && v < 0.002));
  ModelState missing;
  missing.set("cv", a.at("cv"));
  missing.set("ci", a.at("ci"));
  missing.set("eta", a.at("eta"));
  CHECK_THROWS_AS(m->features(missing), UsageError);
  CHECK_THROWS_AS(small("nanovoid", "noise_amp = -1\n"), UsageError);
}

TEST_CASE("heat model right-hand side by hand") {
  auto m = small("heat");
  const auto& hm = dynamic_cast<const HeatModel&>(*m);
  ModelState s = m->initial_state(2);
  const std::vector<double> th{0.3, 1.5};
  auto r = m->rhs(s, th);
  ScalarField lap = serial::laplacian(s.at("T"));
  for (std::size_t n = 0; n < lap.size(); ++n)
    CHECK(r[0][n] == doctest::Approx((0.3 * lap[n] + hm.laser()[n]) / 1.5));
}
