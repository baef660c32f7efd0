#include "reel/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "reel/error.hpp"
#include "reel/rng.hpp"
#include "reel/taylor.hpp"

namespace reel {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

ScalarField random_field(const GridSpec& g, std::uint64_t seed) {
  NormalStream ns(seed);
  ScalarField f(g);
  for (double& v : f.values()) v = ns.next();
  return f;
}

std::vector<CheckResult> suite_vfdd(std::uint64_t seed) {
  std::vector<CheckResult> out;
  for (std::size_t n : {16, 64}) {
    const GridSpec g(n, n, 1.0, 1.0);
    double worst = 0.0;
    bool symmetric = true;
    for (int k = 0; k < 100; ++k) {
      const ScalarField f = random_field(g, derive_seed(seed, static_cast<std::uint64_t>(k)));
      const Spectrum spec = dft2(f);
      std::vector<double> mags;
      for (const Complex& c : spec.coeffs) mags.push_back(std::abs(c));
      std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(mags.size() / 2), mags.end());
      const double median = mags[mags.size() / 2];
      for (double beta : {0.0, median, static_cast<double>(INFINITY)}) {
        const VfddPair p = vfdd(f, beta);
        symmetric = symmetric && p.mask.conjugate_symmetric();
        const ScalarField back = p.value + idft2_real(p.frequency);
        double err = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) err = std::max(err, std::abs(back[i] - f[i]));
        worst = std::max(worst, err / max_abs(f));
      }
    }
    out.push_back({"vfdd reconstruction " + std::to_string(n) + "x" + std::to_string(n),
                   worst <= 1e-10 && symmetric,
                   "max relative error " + fmt(worst) + (symmetric ? "" : ", asymmetric mask")});
  }
  return out;
}

std::vector<CheckResult> suite_jl(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const std::size_t d = 4096;
  const std::size_t n = projected_dim(0.05, d);
  std::vector<std::uint64_t> seeds(200);
  for (std::size_t k = 0; k < seeds.size(); ++k) seeds[k] = derive_seed(seed, 1000 + k);
  for (std::size_t sparsity : {5, 20}) {
    Xoshiro256 rng(derive_seed(seed, sparsity));
    NormalStream ns(derive_seed(seed, 100 + sparsity));
    std::vector<double> x(d, 0.0), y(d, 0.0);
    for (std::size_t k = 0; k < sparsity; ++k) x[rng.next() % d] += ns.next();
    std::vector<double> ratios;
    const double rate = jl_sandwich_trial(seeds, n, x, y, 0.5, &ratios);
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    out.push_back({"jl sandwich " + std::to_string(sparsity) + "-sparse d=4096 n=" + std::to_string(n),
                   rate >= 0.95, "held for " + fmt(100.0 * rate) + "% of 200 seeds, |Px|^2/|x|^2 in [" +
                                     fmt(*lo) + ", " + fmt(*hi) + "]"});
  }
  return out;
}

std::vector<CheckResult> suite_taylor(std::uint64_t) {
  std::size_t fails = 0, total = 0;
  double worst_ratio = 0.0;
  for (double x : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    for (int n = 1; n <= 6; ++n) {
      const double err = std::abs(std::exp(-x) - ExpSeries(n)(x));
      const double bound = remainder_bound_exp(x, n).bound_value;
      ++total;
      if (!(err <= bound)) ++fails;
      worst_ratio = std::max(worst_ratio, err / bound);
    }
  }
  return {{"taylor remainder bound e^-x", fails == 0,
           std::to_string(total - fails) + "/" + std::to_string(total) +
               " cases within bound, max error/bound " + fmt(worst_ratio)}};
}

Config small_config(const std::string& model) {
  Config c = Config::parse("model = " + model + "\nnx = 16\nny = 16\n");
  if (model == "heat") c.set("laser_radius", "3");
  if (model == "sintering") {
    c.set("laser_radius", "4");
    c.set("T0", "1.5");
  }
  return c;
}

std::vector<CheckResult> suite_gradcheck(std::uint64_t seed) {
  std::vector<CheckResult> out;
  for (const std::string name : {"heat", "sintering", "nanovoid"}) {
    const auto model = make_model(small_config(name));
    const Trajectory traj = simulate(*model, seed, 6);
    PreprocessOptions opt;
    opt.ratio = 0.25;
    opt.seed = seed;
    const CompressedDataset cds = preprocess(traj, *model, opt);
    const ReelObjective obj(cds, 1.0);
    Xoshiro256 rng(derive_seed(seed, 77));
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> theta(model->param_count());
      for (std::size_t p = 0; p < theta.size(); ++p) {
        theta[p] = model->param_scales()[p] * (0.5 + rng.uniform());
      }
      worst = std::max(worst, check_gradient(obj, theta).rel_error);
    }
    out.push_back({"gradient vs central differences, " + name, worst < 1e-5,
                   "max relative error " + fmt(worst) + " over 5 random theta"});
  }
  return out;
}

std::vector<CheckResult> suite_conservation(std::uint64_t seed) {
  std::vector<CheckResult> out;
  {
    const auto model = make_model(Config::parse("model = sintering\nnx = 64\nny = 64\n"));
    const Trajectory traj = simulate(*model, seed, 200);
    const double drift = conservation_drift(traj, "phi");
    out.push_back({"sintering phi grid sum, 200 steps", drift < 1e-6, "relative drift " + fmt(drift)});
  }
  {
    const auto model = make_model(Config::parse(
        "model = nanovoid\nnx = 64\nny = 64\nnoise_amp = 0\nproduction = 0\nproduction_eta = 0\n"));
    const Trajectory traj = simulate(*model, seed, 200);
    for (const char* f : {"cv", "ci"}) {
      const double drift = conservation_drift(traj, f);
      out.push_back({std::string("nanovoid ") + f + " grid sum, 200 steps, sources off",
                     drift < 1e-6, "relative drift " + fmt(drift)});
    }
  }
  return out;
}

}  // namespace

std::vector<std::string> suite_names() { return {"vfdd", "jl", "taylor", "gradcheck", "conservation"}; }

std::vector<CheckResult> run_suite(const std::string& suite, std::uint64_t seed) {
  if (suite == "vfdd") return suite_vfdd(seed);
  if (suite == "jl") return suite_jl(seed);
  if (suite == "taylor") return suite_taylor(seed);
  if (suite == "gradcheck") return suite_gradcheck(seed);
  if (suite == "conservation") return suite_conservation(seed);
  throw UsageError("unknown suite: " + suite + " (expected vfdd, jl, taylor, gradcheck, conservation)");
}

GradCheck check_gradient(const Objective& objective, std::span<const double> theta, double h) {
  const Model& model = objective.model();
  model.require_theta(theta);
  const auto& scale = model.param_scales();
  const auto times = objective.all_times();
  const LossGrad lg = objective.evaluate(theta, times, {}, true);
  GradCheck gc;
  std::vector<double> th(theta.begin(), theta.end());
  double gmax = 0.0, emax = 0.0;
  for (std::size_t p = 0; p < th.size(); ++p) {
    const double step = h * scale[p];
    th[p] = theta[p] + step;
    const double up = objective.evaluate(th, times, {}, false).loss;
    th[p] = theta[p] - step;
    const double dn = objective.evaluate(th, times, {}, false).loss;
    th[p] = theta[p];
    gc.analytic.push_back(lg.grad[p] * scale[p]);
    gc.numeric.push_back((up - dn) / (2.0 * h));
    gmax = std::max(gmax, std::abs(gc.analytic.back()));
    emax = std::max(emax, std::abs(gc.analytic.back() - gc.numeric.back()));
  }
  gc.rel_error = gmax > 0.0 ? emax / gmax : emax;
  return gc;
}

double conservation_drift(const Trajectory& traj, const std::string& field) {
  if (traj.steps.empty()) return 0.0;
  const double a = sum(traj.steps.front().at(field));
  const double b = sum(traj.steps.back().at(field));
  return a == 0.0 ? std::abs(b) : std::abs(b - a) / std::abs(a);
}

}  // namespace reel
