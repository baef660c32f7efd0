#include "reel/learn.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <cmath>
#include <numeric>
#include <sstream>

#include "reel/error.hpp"
#include "reel/rng.hpp"

namespace reel {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::shared_ptr<const Model> borrow(const Model& m) {
  return std::shared_ptr<const Model>(&m, [](const Model*) {});
}

// rows: (F+1) x len, row 0 the target. Adds <r, a_i> into g[i] when g is given.
double block_term(const double* rows, std::size_t len, std::size_t F, std::span<const double> v,
                  double dt, double* g, std::vector<double>& r) {
  r.assign(len, 0.0);
  for (std::size_t i = 0; i < F; ++i) {
    const double vi = v[i];
    const double* a = rows + (i + 1) * len;
    for (std::size_t k = 0; k < len; ++k) r[k] += vi * a[k];
  }
  double loss = 0.0;
  for (std::size_t k = 0; k < len; ++k) {
    r[k] = dt * r[k] - rows[k];
    loss += r[k] * r[k];
  }
  if (g) {
    for (std::size_t i = 0; i < F; ++i) {
      const double* a = rows + (i + 1) * len;
      double acc = 0.0;
      for (std::size_t k = 0; k < len; ++k) acc += r[k] * a[k];
      g[i] += acc;
    }
  }
  return loss;
}

double row_energy(const double* row, std::size_t len) {
  double e = 0.0;
  for (std::size_t k = 0; k < len; ++k) e += row[k] * row[k];
  return e;
}

// Per-timestep results computed independently, then reduced in request order.
struct TimeTerm {
  double weighted = 0.0;
  std::vector<double> channel;
  std::vector<double> grad;
};

LossGrad reduce_terms(const std::vector<TimeTerm>& terms, std::size_t channels, std::size_t P,
                      bool want_grad) {
  LossGrad out;
  out.per_channel.assign(channels, 0.0);
  if (want_grad) out.grad.assign(P, 0.0);
  out.per_time.reserve(terms.size());
  for (const TimeTerm& t : terms) {
    out.loss += t.weighted;
    double raw = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      out.per_channel[c] += t.channel[c];
      raw += t.channel[c];
    }
    out.per_time.push_back(raw);
    if (want_grad) {
      for (std::size_t p = 0; p < P; ++p) out.grad[p] += t.grad[p];
    }
  }
  return out;
}

// g (F) are <r, a_i>; grad_p += coeff * sum_i g_i J_ip
void chain(std::span<const double> gi, std::span<const double> J, std::size_t P, double coeff,
           std::vector<double>& grad) {
  for (std::size_t i = 0; i < gi.size(); ++i) {
    const double s = coeff * gi[i];
    for (std::size_t p = 0; p < P; ++p) grad[p] += s * J[i * P + p];
  }
}

void check_channels(const Model& model, std::span<const double> weights) {
  if (!weights.empty() && weights.size() != model.channels().size()) {
    throw UsageError("channel weights: expected " + std::to_string(model.channels().size()) +
                     " entries, got " + std::to_string(weights.size()));
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Preprocessing

double BetaRule::resolve(const Spectrum& change) const {
  if (kind == Kind::Fixed) return value;
  return keep_top_beta(change, value);
}

std::string BetaRule::describe() const {
  std::ostringstream os;
  if (kind == Kind::Fixed) {
    os << "beta=" << value;
  } else {
    os << "keep-top=" << value;
  }
  return os.str();
}

std::vector<ChannelDecomposition> decompose_timestep(const Model& model, const Trajectory& traj,
                                                     std::size_t t, const BetaRule& beta) {
  if (!traj.grid.same_mesh(model.grid())) {
    throw GridMismatch("trajectory grid " + std::to_string(traj.grid.nx) + "x" +
                       std::to_string(traj.grid.ny) + " does not match the model grid");
  }
  if (t + 1 >= traj.steps.size()) throw UsageError("decompose_timestep: t out of range");
  const ModelState& s0 = traj.steps[t];
  const ModelState& s1 = traj.steps[t + 1];
  const auto feats = model.features(s0);
  const auto& channels = model.channels();
  std::vector<ChannelDecomposition> out(channels.size());
  for (std::size_t c = 0; c < channels.size(); ++c) {
    ChannelDecomposition& d = out[c];
    d.routing = channels[c].routing;
    const ScalarField change = s1.at(channels[c].field) - s0.at(channels[c].field);
    const GridSpec& g = change.grid();
    switch (d.routing) {
      case Routing::ValueOnly:
        d.mask = FrequencyMask(g, false);
        d.beta = INFINITY;
        d.value.push_back(change);
        for (const auto& w : feats[c]) d.value.push_back(w);
        break;
      case Routing::FrequencyOnly:
        d.mask = FrequencyMask(g, true);
        d.beta = 0.0;
        d.frequency.push_back(dft2(change));
        for (const auto& w : feats[c]) d.frequency.push_back(dft2(w));
        break;
      case Routing::Vfdd: {
        const Spectrum spec = dft2(change);
        d.beta = beta.resolve(spec);
        d.mask = threshold_mask(spec, d.beta);
        VfddPair p = decompose_with_mask(change, d.mask);
        d.value.push_back(std::move(p.value));
        d.frequency.push_back(std::move(p.frequency));
        for (const auto& w : feats[c]) {
          VfddPair q = decompose_with_mask(w, d.mask);
          d.value.push_back(std::move(q.value));
          d.frequency.push_back(std::move(q.frequency));
        }
        break;
      }
    }
  }
  return out;
}

CompressedDataset preprocess(const Trajectory& traj, const Model& model,
                             const PreprocessOptions& opt) {
  const auto t0 = Clock::now();
  if (!traj.grid.same_mesh(model.grid())) {
    throw GridMismatch("trajectory grid does not match the model grid");
  }
  if (traj.steps.size() < 2) throw UsageError("preprocess needs at least two states");
  if (!(opt.lambda >= 0.0)) throw UsageError("lambda must be >= 0");
  if (opt.beta.kind == BetaRule::Kind::Fixed && !(opt.beta.value >= 0.0)) {
    throw DomainError("beta must be >= 0");
  }
  if (opt.beta.kind == BetaRule::Kind::KeepTop && !(opt.beta.value >= 0.0 && opt.beta.value <= 1.0)) {
    throw UsageError("keep-top fraction must lie in [0, 1]");
  }
  const std::size_t d = traj.grid.size();

  CompressedDataset cds;
  cds.model = model.name();
  cds.config_text = model.config().text();
  cds.param_names = model.param_names();
  cds.theta_true = traj.theta_true.empty() ? model.true_params() : traj.theta_true;
  cds.grid = traj.grid;
  cds.ic_seed = traj.ic_seed;
  cds.source_seed = traj.source_seed;
  cds.projection_seed = opt.seed;
  cds.ratio = opt.ratio;
  cds.beta = opt.beta;
  cds.lambda = opt.lambda;
  if (opt.kind == ProjectionKind::Identity) {
    cds.value_proj = make_identity_projection(d);
    cds.freq_proj = make_identity_projection(d);
  } else {
    const std::size_t n = projected_dim(opt.ratio, d);
    cds.value_proj = make_projection(n, d, derive_seed(opt.seed, 1));
    cds.freq_proj = make_projection(n, d, derive_seed(opt.seed, 2));
  }
  for (const auto& ch : model.channels()) cds.channels.push_back({ch.field, ch.features.size(), ch.routing});
  const std::size_t C = cds.channels.size();
  cds.n_times = traj.steps.size() - 1;
  cds.blocks.resize(cds.n_times * C);

  const Projector pval(cds.value_proj);
  const Projector pfreq(cds.freq_proj);
  const std::size_t nv = cds.n_val(), nf = cds.n_freq();

  std::string error;
#pragma omp parallel
  {
    std::vector<double> x, y;
    std::vector<std::size_t> bins;
#pragma omp for schedule(dynamic)
    for (std::size_t t = 0; t < cds.n_times; ++t) {
      try {
        const auto dec = decompose_timestep(model, traj, t, opt.beta);
        // All value-domain rows of this timestep go through one product.
        std::size_t mv = 0;
        for (std::size_t c = 0; c < C; ++c) {
          if (!dec[c].value.empty()) mv += cds.channels[c].features + 1;
        }
        if (mv > 0) {
          x.resize(d * mv);
          std::size_t col = 0;
          for (std::size_t c = 0; c < C; ++c) {
            for (const ScalarField& f : dec[c].value) {
              for (std::size_t k = 0; k < d; ++k) x[k * mv + col] = f[k];
              ++col;
            }
          }
          y.resize(nv * mv);
          pval.apply(x, mv, y);
          col = 0;
          for (std::size_t c = 0; c < C; ++c) {
            if (dec[c].value.empty()) continue;
            const std::size_t m = cds.channels[c].features + 1;
            CompressedBlock& b = cds.blocks[t * C + c];
            b.value.resize(m * nv);
            for (std::size_t j = 0; j < m; ++j, ++col) {
              for (std::size_t i = 0; i < nv; ++i) b.value[j * nv + i] = y[i * mv + col];
            }
          }
        }
        for (std::size_t c = 0; c < C; ++c) {
          const ChannelDecomposition& cd = dec[c];
          CompressedBlock& b = cds.blocks[t * C + c];
          b.beta = cd.beta;
          if (cd.routing == Routing::Vfdd) b.mask = cd.mask;
          const std::size_t m = cds.channels[c].features + 1;
          if (!cd.frequency.empty()) {
            bins.clear();
            for (std::size_t k = 0; k < d; ++k) {
              if (cd.mask.keep[k]) bins.push_back(k);
            }
            const std::size_t m2 = 2 * m;
            x.resize(bins.size() * m2);
            for (std::size_t r = 0; r < bins.size(); ++r) {
              for (std::size_t j = 0; j < m; ++j) {
                const Complex z = cd.frequency[j].coeffs[bins[r]];
                x[r * m2 + 2 * j] = z.real();
                x[r * m2 + 2 * j + 1] = z.imag();
              }
            }
            y.resize(nf * m2);
            pfreq.apply_rows(bins, x, m2, y);
            b.freq.resize(m * 2 * nf);
            for (std::size_t j = 0; j < m; ++j) {
              for (std::size_t i = 0; i < nf; ++i) {
                b.freq[j * 2 * nf + 2 * i] = y[i * m2 + 2 * j];
                b.freq[j * 2 * nf + 2 * i + 1] = y[i * m2 + 2 * j + 1];
              }
            }
          }
        }
      } catch (const std::exception& e) {
#pragma omp critical
        if (error.empty()) error = e.what();
      }
    }
  }
  if (!error.empty()) throw Error("preprocess failed: " + error);
  cds.preprocess_ms = ms_since(t0);
  return cds;
}

// ---------------------------------------------------------------------------
// Objectives

double Objective::total_loss(std::span<const double> theta) const {
  const auto times = all_times();
  const LossGrad lg = evaluate(theta, times, {}, false);
  double s = 0.0;
  for (double v : lg.per_time) s += v;
  return s;
}

std::vector<std::size_t> Objective::all_times() const {
  std::vector<std::size_t> t(n_times());
  std::iota(t.begin(), t.end(), std::size_t{0});
  return t;
}

ReelObjective::ReelObjective(const CompressedDataset& cds, double lambda)
    : Objective(make_model(Config::parse(cds.config_text))), cds_(&cds), lambda_(lambda) {
  if (!(lambda >= 0.0)) throw UsageError("lambda must be >= 0");
  const auto& ch = model_->channels();
  if (ch.size() != cds.channels.size()) throw FormatError("compressed dataset channels do not match its model");
  for (std::size_t c = 0; c < ch.size(); ++c) {
    if (ch[c].features.size() != cds.channels[c].features) {
      throw FormatError("compressed dataset feature count does not match its model for " +
                        ch[c].field);
    }
  }
}

std::vector<double> ReelObjective::target_energy() const {
  const std::size_t C = n_channels();
  std::vector<double> e(C, 0.0);
  for (std::size_t t = 0; t < cds_->n_times; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      const CompressedBlock& b = cds_->block(t, c);
      if (!b.value.empty()) e[c] += row_energy(b.value.data(), cds_->n_val());
      if (!b.freq.empty()) e[c] += lambda_ * row_energy(b.freq.data(), 2 * cds_->n_freq());
    }
  }
  return e;
}

LossGrad ReelObjective::evaluate(std::span<const double> theta, std::span<const std::size_t> times,
                                 std::span<const double> weights, bool want_grad) const {
  check_channels(*model_, weights);
  const ParamFunctions pf = model_->param_functions(theta);
  const std::size_t C = n_channels(), P = model_->param_count();
  const std::size_t nv = cds_->n_val(), nf2 = 2 * cds_->n_freq();
  const double dt = cds_->grid.dt;
  std::vector<TimeTerm> terms(times.size());
  std::string error;
#pragma omp parallel
  {
    std::vector<double> r, gv, gf;
#pragma omp for schedule(static)
    for (std::size_t k = 0; k < times.size(); ++k) {
      const std::size_t t = times[k];
      if (t >= cds_->n_times) {
#pragma omp critical
        error = "timestep index " + std::to_string(t) + " out of range";
        continue;
      }
      TimeTerm& term = terms[k];
      term.channel.assign(C, 0.0);
      if (want_grad) term.grad.assign(P, 0.0);
      for (std::size_t c = 0; c < C; ++c) {
        const CompressedBlock& b = cds_->block(t, c);
        const std::size_t F = cds_->channels[c].features;
        const double w = weights.empty() ? 1.0 : weights[c];
        gv.assign(F, 0.0);
        gf.assign(F, 0.0);
        double *pgv = want_grad ? gv.data() : nullptr, *pgf = want_grad ? gf.data() : nullptr;
        const double lv =
            b.value.empty() ? 0.0 : block_term(b.value.data(), nv, F, pf.values[c], dt, pgv, r);
        const double lf =
            b.freq.empty() ? 0.0 : block_term(b.freq.data(), nf2, F, pf.values[c], dt, pgf, r);
        const double raw = lv + lambda_ * lf;
        term.channel[c] = raw;
        term.weighted += w * raw;
        if (want_grad) {
          for (std::size_t i = 0; i < F; ++i) gv[i] += lambda_ * gf[i];
          chain(gv, pf.jacobian[c], P, 2.0 * w * dt, term.grad);
        }
      }
    }
  }
  if (!error.empty()) throw UsageError(error);
  return reduce_terms(terms, C, P, want_grad);
}

BaselineObjective::BaselineObjective(const Trajectory& traj, std::shared_ptr<const Model> model,
                                     std::size_t cache_bytes)
    : Objective(std::move(model)), traj_(&traj) {
  if (!traj.grid.same_mesh(model_->grid())) {
    throw GridMismatch("trajectory grid does not match the model grid");
  }
  n_times_ = traj.steps.empty() ? 0 : traj.steps.size() - 1;
  std::size_t rows_per_t = 0;
  for (const auto& ch : model_->channels()) rows_per_t += ch.features.size() + 1;
  const double bytes = static_cast<double>(n_times_) * static_cast<double>(rows_per_t) *
                       static_cast<double>(traj.grid.size()) * sizeof(double);
  if (n_times_ > 0 && bytes <= static_cast<double>(cache_bytes)) {
    cache_.resize(n_times_);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t t = 0; t < n_times_; ++t) rows(t, cache_[t]);
  }
}

void BaselineObjective::rows(std::size_t t, std::vector<std::vector<double>>& out) const {
  const ModelState& s0 = traj_->steps[t];
  const ModelState& s1 = traj_->steps[t + 1];
  const auto feats = model_->features(s0);
  const auto& channels = model_->channels();
  const std::size_t d = traj_->grid.size();
  out.resize(channels.size());
  for (std::size_t c = 0; c < channels.size(); ++c) {
    const std::size_t F = channels[c].features.size();
    out[c].resize((F + 1) * d);
    const ScalarField& a = s0.at(channels[c].field);
    const ScalarField& b = s1.at(channels[c].field);
    for (std::size_t k = 0; k < d; ++k) out[c][k] = b[k] - a[k];
    for (std::size_t i = 0; i < F; ++i) {
      std::copy(feats[c][i].values().begin(), feats[c][i].values().end(),
                out[c].begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
    }
  }
}

std::vector<double> BaselineObjective::target_energy() const {
  const std::size_t C = n_channels();
  std::vector<double> e(C, 0.0);
  for (std::size_t t = 0; t < n_times_; ++t) {
    for (std::size_t c = 0; c < C; ++c) {
      const ScalarField& a = traj_->steps[t].at(model_->channels()[c].field);
      const ScalarField& b = traj_->steps[t + 1].at(model_->channels()[c].field);
      for (std::size_t k = 0; k < a.size(); ++k) e[c] += (b[k] - a[k]) * (b[k] - a[k]);
    }
  }
  return e;
}

LossGrad BaselineObjective::evaluate(std::span<const double> theta,
                                     std::span<const std::size_t> times,
                                     std::span<const double> weights, bool want_grad) const {
  check_channels(*model_, weights);
  const ParamFunctions pf = model_->param_functions(theta);
  const std::size_t C = n_channels(), P = model_->param_count();
  const std::size_t d = traj_->grid.size();
  const double dt = traj_->grid.dt;
  std::vector<TimeTerm> terms(times.size());
  std::string error;
#pragma omp parallel
  {
    std::vector<double> r, g;
    std::vector<std::vector<double>> local;
#pragma omp for schedule(dynamic)
    for (std::size_t k = 0; k < times.size(); ++k) {
      const std::size_t t = times[k];
      if (t >= n_times_) {
#pragma omp critical
        error = "timestep index " + std::to_string(t) + " out of range";
        continue;
      }
      const std::vector<std::vector<double>>* rows_t = &local;
      if (cached()) {
        rows_t = &cache_[t];
      } else {
        try {
          rows(t, local);
        } catch (const std::exception& e) {
#pragma omp critical
          error = e.what();
          continue;
        }
      }
      TimeTerm& term = terms[k];
      term.channel.assign(C, 0.0);
      if (want_grad) term.grad.assign(P, 0.0);
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t F = model_->channels()[c].features.size();
        const double w = weights.empty() ? 1.0 : weights[c];
        g.assign(F, 0.0);
        const double l = block_term((*rows_t)[c].data(), d, F, pf.values[c], dt,
                                    want_grad ? g.data() : nullptr, r);
        term.channel[c] = l;
        term.weighted += w * l;
        if (want_grad) chain(g, pf.jacobian[c], P, 2.0 * w * dt, term.grad);
      }
    }
  }
  if (!error.empty()) throw Error(error);
  return reduce_terms(terms, C, P, want_grad);
}

double loss_reel(std::span<const double> theta, const CompressedDataset& cds, double lambda) {
  const ReelObjective obj(cds, lambda);
  return obj.total_loss(theta);
}

std::vector<double> grad_reel(std::span<const double> theta, const CompressedDataset& cds,
                              double lambda) {
  const ReelObjective obj(cds, lambda);
  return obj.evaluate(theta, obj.all_times(), {}, true).grad;
}

double loss_baseline(std::span<const double> theta, const Trajectory& traj, const Model& model) {
  const BaselineObjective obj(traj, borrow(model), 0);
  return obj.total_loss(theta);
}

std::vector<double> grad_baseline(std::span<const double> theta, const Trajectory& traj,
                                  const Model& model) {
  const BaselineObjective obj(traj, borrow(model), 0);
  return obj.evaluate(theta, obj.all_times(), {}, true).grad;
}

// ---------------------------------------------------------------------------
// Training

void validate(const TrainConfig& cfg) {
  if (!(cfg.lr >= 0.0) || !std::isfinite(cfg.lr)) throw UsageError("learning rate must be >= 0");
  if (cfg.epochs < 1) throw UsageError("epochs must be >= 1");
  if (cfg.batch < 1) throw UsageError("batch must be >= 1");
  if (!(cfg.init_lo <= cfg.init_hi)) throw UsageError("init range must satisfy lo <= hi");
}

namespace {

std::vector<double> channel_weights(const Objective& obj, bool normalize) {
  const std::size_t C = obj.n_channels();
  std::vector<double> w(C, 1.0);
  if (!normalize || obj.n_times() == 0) return w;
  const std::vector<double> e = obj.target_energy();
  for (std::size_t c = 0; c < C; ++c) {
    const double mean = e[c] / static_cast<double>(obj.n_times());
    w[c] = mean > 0.0 ? 1.0 / (static_cast<double>(C) * mean) : 1.0;
  }
  return w;
}

}  // namespace

double normalized_objective(const Objective& objective, std::span<const double> theta) {
  const auto w = channel_weights(objective, true);
  const auto times = objective.all_times();
  if (times.empty()) return 0.0;
  return objective.evaluate(theta, times, w, false).loss / static_cast<double>(times.size());
}

TrainResult train(const Objective& objective, const TrainConfig& cfg) {
  validate(cfg);
  const Model& model = objective.model();
  const std::size_t P = model.param_count();
  const std::vector<double>& scale = model.param_scales();
  const std::size_t T = objective.n_times();
  if (T == 0) throw UsageError("training needs at least one timestep");

  std::vector<double> z(P);
  if (!cfg.init_theta.empty()) {
    model.require_theta(cfg.init_theta);
    for (std::size_t p = 0; p < P; ++p) z[p] = cfg.init_theta[p] / scale[p];
  } else {
    Xoshiro256 init(derive_seed(cfg.seed, 11));
    for (std::size_t p = 0; p < P; ++p) z[p] = cfg.init_lo + (cfg.init_hi - cfg.init_lo) * init.uniform();
  }
  std::vector<double> theta(P);
  for (std::size_t p = 0; p < P; ++p) theta[p] = z[p] * scale[p];

  TrainResult res;
  res.lr = cfg.lr;
  res.theta_init = theta;
  const std::vector<double> w = channel_weights(objective, cfg.normalize);

  Xoshiro256 shuffle(derive_seed(cfg.seed, 12));
  std::vector<std::size_t> order(T);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> loss_by_t(T);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = Clock::now();
    for (std::size_t k = T; k > 1; --k) std::swap(order[k - 1], order[shuffle.next() % k]);
    for (std::size_t start = 0; start < T; start += cfg.batch) {
      const std::size_t stop = std::min(T, start + cfg.batch);
      const std::span<const std::size_t> batch(order.data() + start, stop - start);
      const LossGrad lg = objective.evaluate(theta, batch, w, true);
      if (!std::isfinite(lg.loss)) {
        throw DivergenceError("non-finite training loss at epoch " + std::to_string(epoch) +
                                  " (lr " + std::to_string(cfg.lr) +
                                  "); try a smaller learning rate",
                              epoch);
      }
      for (std::size_t k = 0; k < batch.size(); ++k) loss_by_t[batch[k]] = lg.per_time[k];
      const double step = cfg.lr / static_cast<double>(batch.size());
      for (std::size_t p = 0; p < P; ++p) {
        z[p] -= step * scale[p] * lg.grad[p];
        theta[p] = z[p] * scale[p];
      }
    }
    double epoch_loss = 0.0;
    for (double v : loss_by_t) epoch_loss += v;
    res.loss.push_back(epoch_loss);
    res.epoch_ms.push_back(ms_since(t0));
    res.theta_history.push_back(theta);
    if (!std::isfinite(epoch_loss) ||
        !std::all_of(theta.begin(), theta.end(), [](double v) { return std::isfinite(v); })) {
      throw DivergenceError("non-finite parameters after epoch " + std::to_string(epoch) +
                                " (lr " + std::to_string(cfg.lr) + "); try a smaller learning rate",
                            epoch);
    }
  }
  res.theta = theta;
  res.final_objective = normalized_objective(objective, theta);
  if (!std::isfinite(res.final_objective)) {
    throw DivergenceError("non-finite final objective (lr " + std::to_string(cfg.lr) + ")",
                          cfg.epochs);
  }
  return res;
}

TrainResult train_lr_search(const Objective& objective, TrainConfig cfg,
                            std::span<const double> lrs) {
  if (lrs.empty()) throw UsageError("learning-rate grid is empty");
  TrainResult best;
  bool have = false;
  std::string last_error;
  for (double lr : lrs) {
    cfg.lr = lr;
    try {
      TrainResult r = train(objective, cfg);
      if (!have || r.final_objective < best.final_objective) {
        best = std::move(r);
        have = true;
      }
    } catch (const DivergenceError& e) {
      last_error = e.what();
    }
  }
  if (!have) throw DivergenceError("every learning rate diverged; last: " + last_error, 0);
  return best;
}

// ---------------------------------------------------------------------------
// Evaluation

RolloutEval evaluate_rollout_mse(std::span<const double> theta_hat, const Model& model,
                                 std::span<const std::uint64_t> ic_seeds, std::size_t n_steps,
                                 StepRule rule) {
  model.require_theta(theta_hat);
  if (n_steps < 1) throw UsageError("rollout needs n_steps >= 1");
  const auto& channels = model.channels();
  const std::size_t C = channels.size();
  struct PerIc {
    bool ok = false;
    std::string why;
    std::vector<double> sq;
  };
  std::vector<PerIc> per(ic_seeds.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t k = 0; k < ic_seeds.size(); ++k) {
    PerIc& r = per[k];
    try {
      ModelState truth = model.initial_state(ic_seeds[k]);
      ModelState hat = truth;
      for (std::size_t s = 0; s < n_steps; ++s) {
        truth = step(model, truth, model.true_params(), rule);
        hat = step(model, hat, theta_hat, rule);
      }
      r.sq.assign(C, 0.0);
      for (std::size_t c = 0; c < C; ++c) {
        const ScalarField& a = truth.at(channels[c].field);
        const ScalarField& b = hat.at(channels[c].field);
        for (std::size_t n = 0; n < a.size(); ++n) r.sq[c] += (a[n] - b[n]) * (a[n] - b[n]);
      }
      r.ok = true;
    } catch (const Error& e) {
      r.why = e.what();
    }
  }
  RolloutEval out;
  for (const auto& ch : channels) out.fields.push_back(ch.field);
  out.mse.assign(C, 0.0);
  for (std::size_t k = 0; k < per.size(); ++k) {
    if (!per[k].ok) {
      out.failed_seeds.push_back(ic_seeds[k]);
      out.failures.push_back(per[k].why);
      continue;
    }
    ++out.n_ok;
    for (std::size_t c = 0; c < C; ++c) out.mse[c] += per[k].sq[c];
  }
  const double cells = static_cast<double>(model.grid().size());
  for (double& m : out.mse) {
    m = out.n_ok == 0 ? NAN : m / (static_cast<double>(out.n_ok) * cells);
  }
  return out;
}

void save_theta(const std::string& path, const Model& model, std::span<const double> theta) {
  model.require_theta(theta);
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write theta file: " + path);
  out << "model = " << model.name() << "\n";
  out.precision(17);
  for (std::size_t p = 0; p < theta.size(); ++p) out << model.param_names()[p] << " = " << theta[p] << "\n";
  if (!out) throw UsageError("cannot write theta file: " + path);
}

std::vector<double> load_theta(const std::string& path, const Model& model) {
  std::ifstream probe(path);
  if (!probe) throw FormatError("cannot read theta file: " + path);
  Config c;
  try {
    c = Config::load(path);
  } catch (const UsageError& e) {
    throw FormatError(std::string("theta file ") + path + ": " + e.what());
  }
  if (c.has("model") && c.get_string("model") != model.name()) {
    throw FormatError("theta file " + path + " is for model " + c.get_string("model") +
                      ", not " + model.name());
  }
  std::vector<double> theta;
  for (const auto& name : model.param_names()) {
    if (!c.has(name)) throw FormatError("theta file " + path + " lacks parameter " + name);
    try {
      theta.push_back(c.get_double(name));
    } catch (const UsageError& e) {
      throw FormatError(std::string("theta file ") + path + ": " + e.what());
    }
    if (!std::isfinite(theta.back())) throw FormatError("theta file " + path + ": non-finite " + name);
  }
  return theta;
}

std::vector<double> relative_errors(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("relative_errors: length mismatch");
  std::vector<double> out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) {
    out[k] = b[k] == 0.0 ? std::abs(a[k]) : std::abs(a[k] - b[k]) / std::abs(b[k]);
  }
  return out;
}

}  // namespace reel
