#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <vector>

#include "microweather/checkpoint.hpp"
#include "microweather/dataset.hpp"
#include "microweather/nn/graph.hpp"

namespace mw {

struct TrainConfig {
  double lr0 = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t timestamps_per_step = 32;
  std::size_t targets_per_timestamp = 64;
  std::size_t epochs = 8;           // one epoch = ceil(T / timestamps_per_step) steps
  std::size_t steps = 0;            // overrides epochs when nonzero
  std::size_t eval_every = 25;
  std::size_t val_timestamps = 48;  // evenly spaced validation hours; 0 = all
  bool preflight = true;
  std::uint64_t seed = 0;

  /// Throws InvalidConfig.
  void validate() const;
  [[nodiscard]] std::size_t total_steps(std::size_t time_steps) const noexcept;
};

/// Weighted MSE in normalized space over entries with valid != 0. Throws EmptyBatch.
nn::Var loss(const nn::Var& predictions, const nn::Matrix& observations, const nn::Matrix& valid);
/// Scalar version of loss() for plain matrices.
double loss_value(const nn::Matrix& predictions, const nn::Matrix& observations, const nn::Matrix& valid);

/// lr0 * (1 + cos(pi * step / total)) / 2; lr0 when total is 0.
double cosine_lr(double lr0, std::size_t step, std::size_t total) noexcept;

struct AdamState {
  nn::Gradients m;
  nn::Gradients v;
  std::size_t step = 0;  // completed updates
};

/// One AdamW update at schedule position state.step (bias correction uses state.step + 1).
/// Throws NumericalError naming the first non-finite gradient.
void adam_step(nn::ParameterStore& params, const nn::Gradients& grads, AdamState& state, const TrainConfig& config,
               std::size_t total_steps);

struct TrainRecord {
  std::size_t step = 0;
  double loss = 0.0;                 // NaN for the initial evaluation row
  std::optional<double> val_loss;
  double lr = 0.0;
};

struct TrainReport {
  std::vector<TrainRecord> records;
  std::size_t selected_step = 0;
  double selected_val_loss = 0.0;
  double selected_val_mae_temperature = 0.0;
  double preflight_rel_error = 0.0;
  bool diverged = false;
  std::string diagnostics;

  /// Lines `step,loss,val_loss,lr` with a header; val_loss empty when not evaluated.
  void write_csv(std::ostream& out) const;
};

struct TrainResult {
  ModelState state;
  TrainReport report;
};

/// Progress callback: (step, total, loss).
using TrainProgress = std::function<void(std::size_t, std::size_t, double)>;

/// Samples timestamps and train-station subsets with a seeded generator, evaluates the validation
/// loss every eval_every steps (and at steps 0 and total) and returns the parameters with the
/// lowest validation loss. Deterministic for a fixed seed. Throws PartitionError when backbone,
/// train or val is empty.
TrainResult train(const Dataset& dataset, const ModelConfig& model_config, const TrainConfig& train_config,
                  const TrainProgress& progress = {});

/// Validation loss (observed channels only) of `state` on stations of role `role`.
struct ValidationScore {
  double loss = 0.0;
  double mae_temperature = 0.0;
};
ValidationScore validation_score(const Dataset& dataset, const ModelState& state, Role role,
                                 std::size_t max_timestamps);

/// Central-difference check of the directional derivative of the batch loss along a random
/// direction; returns the relative error.
double gradient_check(const Dataset& dataset, const ModelState& state, std::uint64_t seed, double eps = 1e-6);

}  // namespace mw
