#pragma once

// Preprocessing into compressed sketches, the compressed and uncompressed
// losses with analytic gradients, mini-batch SGD and rollout evaluation.

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "reel/model.hpp"
#include "reel/sim.hpp"
#include "reel/sketch.hpp"
#include "reel/spectral.hpp"

namespace reel {

/// Per-timestep threshold: a fixed beta, or the beta that keeps the top
/// `value` fraction of DFT bins of the ground-truth change (0.1 = 90th percentile).
struct BetaRule {
  enum class Kind : std::uint8_t { Fixed = 0, KeepTop = 1 };
  Kind kind = Kind::KeepTop;
  double value = 0.1;

  static BetaRule fixed(double beta) { return {Kind::Fixed, beta}; }
  static BetaRule keep_top(double fraction) { return {Kind::KeepTop, fraction}; }
  double resolve(const Spectrum& change) const;
  std::string describe() const;
};

/// Value- and frequency-domain pieces of one (timestep, channel), before projection.
/// Index 0 is the ground-truth change, 1..F the features.
struct ChannelDecomposition {
  Routing routing = Routing::Vfdd;
  FrequencyMask mask;
  double beta = 0.0;
  std::vector<ScalarField> value;   // empty for FrequencyOnly
  std::vector<Spectrum> frequency;  // empty for ValueOnly
};

/// Splits the change u(t+1) - u(t) and every feature of state t with the change's mask.
std::vector<ChannelDecomposition> decompose_timestep(const Model& model, const Trajectory& traj,
                                                     std::size_t t, const BetaRule& beta);

struct ChannelInfo {
  std::string field;
  std::size_t features = 0;
  Routing routing = Routing::Vfdd;
};

/// Sketches of one (timestep, channel). Rows are [target, feature 1..F]; value rows
/// have n_val entries, frequency rows 2 n_freq (real and imaginary sketches
/// interleaved per output row). A block without a domain leaves that vector empty.
struct CompressedBlock {
  FrequencyMask mask;  // only stored for Vfdd channels
  double beta = 0.0;
  std::vector<double> value;
  std::vector<double> freq;
};

struct CompressedDataset {
  std::string model;
  std::string config_text;
  std::vector<std::string> param_names;
  std::vector<double> theta_true;
  GridSpec grid;
  std::uint64_t ic_seed = 0;
  std::uint64_t source_seed = 0;
  std::uint64_t projection_seed = 0;
  ProjectionSpec value_proj;
  ProjectionSpec freq_proj;
  double ratio = 1.0;
  BetaRule beta;
  double lambda = 1.0;
  double preprocess_ms = 0.0;
  std::vector<ChannelInfo> channels;
  std::size_t n_times = 0;
  std::vector<CompressedBlock> blocks;  // [t * channels + c]

  const CompressedBlock& block(std::size_t t, std::size_t c) const {
    return blocks[t * channels.size() + c];
  }
  std::size_t n_val() const noexcept { return value_proj.n(); }
  std::size_t n_freq() const noexcept { return freq_proj.n(); }
};

struct PreprocessOptions {
  double ratio = 0.1;
  BetaRule beta;
  std::uint64_t seed = 0;
  double lambda = 1.0;
  ProjectionKind kind = ProjectionKind::Gaussian;
};

/// Throws GridMismatch when the trajectory does not match the model grid and
/// UsageError when ratio * d < 1. Parallel over timesteps; bitwise reproducible.
CompressedDataset preprocess(const Trajectory& traj, const Model& model,
                             const PreprocessOptions& opt);

void save_compressed(const CompressedDataset& cds, const std::string& path);
CompressedDataset load_compressed(const std::string& path);

// ---------------------------------------------------------------------------
// Objectives

struct LossGrad {
  /// Weighted loss.
  double loss = 0.0;
  /// Gradient of the weighted loss over theta; empty unless requested.
  std::vector<double> grad;
  /// Raw (unweighted) loss per requested timestep, in request order.
  std::vector<double> per_time;
  /// Raw loss per channel over the requested timesteps.
  std::vector<double> per_channel;
};

/// A sum over timesteps of per-channel squared residuals of
/// dt sum_i phi_i(theta) a_i - b. Implementations hold either sketches or raw fields.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t n_times() const = 0;
  virtual std::size_t n_channels() const = 0;
  /// Squared norm of the target per channel, summed over all timesteps.
  virtual std::vector<double> target_energy() const = 0;
  /// sum over `times` and channels of weight[c] * loss(t, c), with gradient over
  /// theta when grad is requested. Empty weights means all ones. Per-timestep
  /// terms are reduced in the order given.
  virtual LossGrad evaluate(std::span<const double> theta, std::span<const std::size_t> times,
                            std::span<const double> weights, bool want_grad) const = 0;
  const Model& model() const { return *model_; }
  /// Raw loss over every timestep, reduced in timestep order.
  double total_loss(std::span<const double> theta) const;
  std::vector<std::size_t> all_times() const;

 protected:
  explicit Objective(std::shared_ptr<const Model> model) : model_(std::move(model)) {}
  std::shared_ptr<const Model> model_;
};

/// Compressed two-part loss: value residual plus lambda times frequency residual.
class ReelObjective final : public Objective {
 public:
  ReelObjective(const CompressedDataset& cds, double lambda);
  std::size_t n_times() const override { return cds_->n_times; }
  std::size_t n_channels() const override { return cds_->channels.size(); }
  std::vector<double> target_energy() const override;
  LossGrad evaluate(std::span<const double> theta, std::span<const std::size_t> times,
                    std::span<const double> weights, bool want_grad) const override;
  double lambda() const noexcept { return lambda_; }

 private:
  const CompressedDataset* cds_;
  double lambda_;
};

/// Uncompressed loss over raw changes and features. Features are cached when
/// they fit in `cache_bytes`, recomputed from the trajectory otherwise.
class BaselineObjective final : public Objective {
 public:
  BaselineObjective(const Trajectory& traj, std::shared_ptr<const Model> model,
                    std::size_t cache_bytes = std::size_t{1} << 30);
  std::size_t n_times() const override { return n_times_; }
  std::size_t n_channels() const override { return model_->channels().size(); }
  std::vector<double> target_energy() const override;
  LossGrad evaluate(std::span<const double> theta, std::span<const std::size_t> times,
                    std::span<const double> weights, bool want_grad) const override;
  bool cached() const noexcept { return !cache_.empty(); }

 private:
  // rows [change, W_1..W_F] for channel c at time t, each of length d
  void rows(std::size_t t, std::vector<std::vector<double>>& out) const;

  const Trajectory* traj_;
  std::size_t n_times_;
  std::vector<std::vector<std::vector<double>>> cache_;  // [t][c] -> (F+1) x d
};

/// Full-dataset raw losses and gradients.
double loss_reel(std::span<const double> theta, const CompressedDataset& cds, double lambda);
std::vector<double> grad_reel(std::span<const double> theta, const CompressedDataset& cds,
                              double lambda);
double loss_baseline(std::span<const double> theta, const Trajectory& traj, const Model& model);
std::vector<double> grad_baseline(std::span<const double> theta, const Trajectory& traj,
                                  const Model& model);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double lr = 1e-2;
  std::size_t epochs = 100;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  /// theta_p = z_p * scale_p with z drawn uniformly in [init_lo, init_hi].
  double init_lo = 0.5;
  double init_hi = 1.5;
  /// Explicit starting point; overrides the random draw when non-empty.
  std::vector<double> init_theta;
  /// Divide each channel's loss by its mean target energy.
  bool normalize = true;
};

/// Throws UsageError unless lr >= 0, epochs >= 1, batch >= 1.
void validate(const TrainConfig& cfg);

struct TrainResult {
  std::vector<double> theta;
  std::vector<double> theta_init;
  double lr = 0.0;
  /// Per epoch: sum of the raw batch losses seen in that epoch.
  std::vector<double> loss;
  std::vector<double> epoch_ms;
  /// theta at the end of each epoch.
  std::vector<std::vector<double>> theta_history;
  /// Normalized full-dataset objective at the final theta.
  double final_objective = 0.0;
};

/// Mini-batch SGD over timesteps in the scaled coordinates z = theta / scale.
/// Throws DivergenceError with the epoch index when the loss turns non-finite.
TrainResult train(const Objective& objective, const TrainConfig& cfg);

inline const std::vector<double> kLearningRateGrid = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5};

/// Trains once per learning rate and keeps the run with the lowest final
/// normalized objective. Diverging rates are skipped; throws DivergenceError if all diverge.
TrainResult train_lr_search(const Objective& objective, TrainConfig cfg,
                            std::span<const double> lrs = kLearningRateGrid);

/// Normalized full-dataset objective, as minimized by train.
double normalized_objective(const Objective& objective, std::span<const double> theta);

// ---------------------------------------------------------------------------
// Evaluation

struct RolloutEval {
  std::vector<std::string> fields;
  /// Mean over usable ICs and cells of the squared final-step error, per channel.
  std::vector<double> mse;
  std::size_t n_ok = 0;
  std::vector<std::uint64_t> failed_seeds;
  std::vector<std::string> failures;
};

/// Rolls out theta_hat and the true parameters from each IC and compares the final
/// states. ICs whose rollout diverges or violates the stability guard are listed in
/// failed_seeds instead of contributing.
RolloutEval evaluate_rollout_mse(std::span<const double> theta_hat, const Model& model,
                                 std::span<const std::uint64_t> ic_seeds, std::size_t n_steps,
                                 StepRule rule = StepRule::Monolithic);

/// Theta files are `name = value` lines (plus an optional `model = ...`).
void save_theta(const std::string& path, const Model& model, std::span<const double> theta);
/// Throws FormatError unless every parameter of the model is present and numeric.
std::vector<double> load_theta(const std::string& path, const Model& model);

/// Relative error |a - b| / |b| per component.
std::vector<double> relative_errors(std::span<const double> a, std::span<const double> b);

}  // namespace reel
