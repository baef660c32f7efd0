// reel: simulate / preprocess / train / eval / verify.
//
// Exit codes: 0 ok, 1 usage or configuration, 2 data or format, 3 numerical divergence.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#ifdef __GLIBC__
#include <malloc.h>
#endif
#include <memory>
#include <sstream>

#include "reel/dataset.hpp"
#include "reel/error.hpp"
#include "reel/learn.hpp"
#include "reel/rng.hpp"
#include "reel/verify.hpp"

namespace {

using namespace reel;

Config load_config(const std::string& path, const std::vector<std::string>& overrides) {
  Config c = Config::load(path);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got " + kv);
    c.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return c;
}

std::string file_magic(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open dataset file: " + path);
  char buf[4] = {};
  in.read(buf, 4);
  return std::string(buf, static_cast<std::size_t>(in.gcount()));
}

// Writes to `path`, or stdout for "-" / empty.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw UsageError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

struct SimulateArgs {
  std::string config, out;
  std::vector<std::string> overrides;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string rule = "monolithic";
};

int cmd_simulate(const SimulateArgs& a) {
  const Config cfg = load_config(a.config, a.overrides);
  const auto model = make_model(cfg);
  const std::size_t steps =
      a.steps ? a.steps : static_cast<std::size_t>(model->config().get_int("steps", 100));
  const std::uint64_t seed = a.seed_set ? a.seed : model->config().get_u64("ic_seed", 0);
  const Trajectory traj = simulate(*model, seed, steps, parse_step_rule(a.rule));
  save(traj, a.out);
  std::cerr << "wrote " << traj.steps.size() << " states of " << model->name() << " ("
            << traj.grid.nx << "x" << traj.grid.ny << ", dt " << traj.grid.dt << ", ic_seed "
            << seed << ") to " << a.out << "\n";
  return 0;
}

struct PreprocessArgs {
  std::string data, out;
  double beta = NAN;
  double keep_top = NAN;
  double ratio = 0.1;
  double lambda = 1.0;
  std::uint64_t seed = 0;
};

int cmd_preprocess(const PreprocessArgs& a) {
  const Trajectory traj = load(a.data);
  const auto model = model_for(traj);
  PreprocessOptions opt;
  opt.ratio = a.ratio;
  opt.seed = a.seed;
  opt.lambda = a.lambda;
  if (!std::isnan(a.beta)) {
    opt.beta = BetaRule::fixed(a.beta);
  } else if (!std::isnan(a.keep_top)) {
    opt.beta = BetaRule::keep_top(a.keep_top);
  }
  const CompressedDataset cds = preprocess(traj, *model, opt);
  save_compressed(cds, a.out);
  std::cerr << "preprocessed " << cds.n_times << " timesteps of " << cds.model << ": d "
            << cds.grid.size() << ", n_val " << cds.n_val() << ", n_freq " << cds.n_freq()
            << ", r " << cds.ratio << ", " << cds.beta.describe() << ", projection seed "
            << cds.projection_seed << ", " << std::fixed << std::setprecision(1)
            << cds.preprocess_ms << " ms\n";
  return 0;
}

struct TrainArgs {
  std::string data, csv, theta_out;
  bool baseline = false;
  std::size_t epochs = 100;
  std::size_t batch = 32;
  double lr = NAN;
  double lambda = NAN;
  std::uint64_t seed = 0;
  std::size_t cache_mb = 1024;
};

int cmd_train(const TrainArgs& a) {
  if (a.epochs == 0) throw UsageError("--epochs must be >= 1");
  const std::string magic = file_magic(a.data);
  std::unique_ptr<Trajectory> traj;
  std::unique_ptr<CompressedDataset> cds;
  std::unique_ptr<Objective> obj;
  std::string mode;
  if (a.baseline) {
    if (magic != "REEL") throw FormatError("--baseline needs a raw dataset (REEL file): " + a.data);
    traj = std::make_unique<Trajectory>(load(a.data));
    std::shared_ptr<const Model> model = model_for(*traj);
    obj = std::make_unique<BaselineObjective>(*traj, model, a.cache_mb << 20);
    mode = "baseline";
  } else {
    if (magic != "RLCD") {
      throw FormatError("training needs a compressed dataset (RLCD file; run preprocess, or pass "
                        "--baseline for a raw one): " + a.data);
    }
    cds = std::make_unique<CompressedDataset>(load_compressed(a.data));
    obj = std::make_unique<ReelObjective>(*cds, std::isnan(a.lambda) ? cds->lambda : a.lambda);
    mode = "reel";
  }
  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch = a.batch;
  cfg.seed = a.seed;
  TrainResult res;
  if (std::isnan(a.lr)) {
    res = train_lr_search(*obj, cfg);
  } else {
    cfg.lr = a.lr;
    res = train(*obj, cfg);
  }
  const Model& model = obj->model();

  Output csv(a.csv);
  std::ostream& os = csv.stream();
  os << "epoch,loss,wall_ms";
  for (const auto& n : model.param_names()) os << "," << n;
  os << "\n" << std::setprecision(17);
  for (std::size_t e = 0; e < res.loss.size(); ++e) {
    os << e << "," << res.loss[e] << "," << res.epoch_ms[e];
    for (double v : res.theta_history[e]) os << "," << v;
    os << "\n";
  }
  if (!a.theta_out.empty()) save_theta(a.theta_out, model, res.theta);

  const std::vector<double>& truth = cds ? cds->theta_true : traj->theta_true;
  const auto rel = relative_errors(res.theta, truth);
  double mean_ms = 0.0;
  for (double m : res.epoch_ms) mean_ms += m;
  mean_ms /= static_cast<double>(res.epoch_ms.size());
  const double lambda = cds ? static_cast<const ReelObjective&>(*obj).lambda() : 0.0;
  std::ostringstream sum;
  sum << "mode " << mode << ", model " << model.name() << ", lr " << res.lr << ", epochs "
      << a.epochs << ", batch " << a.batch << ", seed " << a.seed << "\n";
  if (cds) {
    sum << "r " << cds->ratio << ", n_val " << cds->n_val() << ", n_freq " << cds->n_freq() << ", "
        << cds->beta.describe() << ", lambda " << lambda << ", projection seed " << cds->projection_seed << ", preprocess " << cds->preprocess_ms
        << " ms\n";
  }
  sum << "mean epoch " << mean_ms << " ms, final loss " << res.loss.back() << "\n";
  sum << "param,theta_hat,theta_true,rel_error\n";
  for (std::size_t p = 0; p < res.theta.size(); ++p) {
    sum << model.param_names()[p] << "," << res.theta[p] << "," << truth[p] << "," << rel[p] << "\n";
  }
  std::cerr << sum.str();
  return 0;
}

struct EvalArgs {
  std::string theta, config, csv;
  std::vector<std::string> overrides;
  std::size_t steps = 200;
  std::size_t n_ics = 20;
  std::uint64_t seed = 1000;
  std::string rule = "monolithic";
};

int cmd_eval(const EvalArgs& a) {
  const auto model = make_model(load_config(a.config, a.overrides));
  const std::vector<double> theta =
      a.theta == "true" ? model->true_params() : load_theta(a.theta, *model);
  std::vector<std::uint64_t> seeds(a.n_ics);
  for (std::size_t k = 0; k < seeds.size(); ++k) seeds[k] = derive_seed(a.seed, k);
  const RolloutEval ev = evaluate_rollout_mse(theta, *model, seeds, a.steps, parse_step_rule(a.rule));
  Output csv(a.csv);
  std::ostream& os = csv.stream();
  os << "field,mse,n_ok,n_failed\n" << std::setprecision(17);
  for (std::size_t c = 0; c < ev.fields.size(); ++c) {
    os << ev.fields[c] << "," << ev.mse[c] << "," << ev.n_ok << "," << ev.failed_seeds.size() << "\n";
  }
  for (std::size_t k = 0; k < ev.failed_seeds.size(); ++k) {
    std::cerr << "ic seed " << ev.failed_seeds[k] << " excluded: " << ev.failures[k] << "\n";
  }
  return 0;
}

int cmd_verify(const std::string& suite, std::uint64_t seed) {
  std::vector<std::string> suites = suite == "all" ? suite_names() : std::vector<std::string>{suite};
  bool all_pass = true;
  for (const auto& s : suites) {
    for (const CheckResult& r : run_suite(s, seed)) {
      std::cout << (r.pass ? "PASS" : "FAIL") << "  " << s << "  " << r.name << "  (" << r.detail
                << ")\n";
      all_pass = all_pass && r.pass;
    }
  }
  return all_pass ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
#ifdef __GLIBC__
  // Fields are 128 KiB and up; keep them on the heap instead of fresh mmaps.
  mallopt(M_MMAP_THRESHOLD, 64 << 20);
  mallopt(M_TRIM_THRESHOLD, 256 << 20);
#endif
  CLI::App app{"Learn PDE parameters from compressed value/frequency sketches"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Generate a ground-truth trajectory");
  s->add_option("--config", sim.config, "Model config file")->required()->check(CLI::ExistingFile);
  s->add_option("--out", sim.out, "Dataset file to write")->required();
  s->add_option("--steps", sim.steps, "Number of steps (default: config `steps` or 100)");
  s->add_option("--seed", sim.seed, "Initial-condition seed (default: config `ic_seed` or 0)")
      ->each([&](const std::string&) { sim.seed_set = true; });
  s->add_option("--set", sim.overrides, "Override a config key, key=value");
  s->add_option("--rule", sim.rule, "monolithic or decomposed right-hand side");

  PreprocessArgs pre;
  auto* p = app.add_subcommand("preprocess", "Decompose and project a dataset");
  p->add_option("data", pre.data, "Raw dataset")->required();
  p->add_option("--out", pre.out, "Compressed dataset to write")->required();
  auto* beta = p->add_option("--beta", pre.beta,
                             "Fixed threshold on unnormalized DFT magnitudes (scales with grid size)");
  p->add_option("--keep-top", pre.keep_top,
                "Keep this fraction of the largest bins per timestep (default 0.1)")
      ->excludes(beta);
  p->add_option("--ratio,-r", pre.ratio, "Compression ratio r, n = ceil(r d)");
  p->add_option("--seed", pre.seed, "Projection seed");
  p->add_option("--lambda", pre.lambda, "Frequency-term weight stored as the default");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Fit parameters by mini-batch SGD");
  t->add_option("data", tr.data, "Compressed dataset, or raw with --baseline")->required();
  t->add_flag("--baseline", tr.baseline, "Train on the raw dataset with the uncompressed loss");
  t->add_option("--epochs", tr.epochs, "Epochs (>= 1)");
  t->add_option("--batch", tr.batch, "Timesteps per update");
  t->add_option("--lr", tr.lr, "Learning rate (default: best of 1e-1 .. 1e-5)");
  t->add_option("--lambda", tr.lambda, "Override the dataset's lambda");
  t->add_option("--seed", tr.seed, "Initialization and shuffling seed");
  t->add_option("--csv", tr.csv, "Per-epoch CSV (default stdout)");
  t->add_option("--theta-out", tr.theta_out, "Write the fitted theta here");
  t->add_option("--cache-mb", tr.cache_mb, "Baseline feature cache budget");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Rollout MSE of a theta against the true parameters");
  e->add_option("--theta", ev.theta, "Theta file, or `true`")->required();
  e->add_option("--config", ev.config, "Model config")->required()->check(CLI::ExistingFile);
  e->add_option("--set", ev.overrides, "Override a config key, key=value");
  e->add_option("--rollout-steps", ev.steps, "Steps per rollout");
  e->add_option("--n-ics", ev.n_ics, "Number of held-out initial conditions");
  e->add_option("--seed", ev.seed, "Base seed for the initial conditions");
  e->add_option("--csv", ev.csv, "Output CSV (default stdout)");
  e->add_option("--rule", ev.rule, "monolithic or decomposed right-hand side");

  std::string suite = "all";
  std::uint64_t vseed = 0;
  auto* v = app.add_subcommand("verify", "Run the property suites");
  v->add_option("--suite", suite, "vfdd, jl, taylor, gradcheck, conservation or all");
  v->add_option("--seed", vseed, "Seed for random fields and projections");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*s) return cmd_simulate(sim);
    if (*p) return cmd_preprocess(pre);
    if (*t) return cmd_train(tr);
    if (*e) return cmd_eval(ev);
    if (*v) return cmd_verify(suite, vseed);
  } catch (const FormatError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const GridMismatch& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const DivergenceError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 1;
}
