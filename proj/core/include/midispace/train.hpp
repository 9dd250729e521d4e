#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "midispace/model.hpp"

namespace midispace {

struct TrainConfig {
  int batch_size = 8;
  double lr_start = 1e-3;
  double lr_floor = 1e-5;
  double lr_decay = 0.9999;
  long max_steps = 1000;
  bool augment = false;  // transpose by -3..+3 semitones at batch assembly
  std::uint64_t seed = 0;

  bool operator==(const TrainConfig&) const = default;
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

/// max(lr_floor, lr_start * decay^step); step counts completed updates.
double learning_rate(const TrainConfig& config, long step);

/// Adam moment buffers, parallel to the model's parameter order.
struct AdamState {
  long t = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

struct StepMetrics {
  long step = 0;
  double recon = 0.0;
  double kl = 0.0;
  double total = 0.0;
  double lr = 0.0;
  double accuracy = 0.0;  // teacher-forced argmax accuracy on the batch
};

class Trainer {
 public:
  Trainer(Model& model, const TrainConfig& config);

  /// One forward/backward pass over the batch and one Adam update.
  /// Throws on a non-finite loss, before touching the parameters.
  StepMetrics train_step(const std::vector<Measure>& batch);

  /// Runs `steps` updates, assembling shuffled (and optionally augmented)
  /// batches from the dataset.
  void train(const std::vector<Measure>& dataset, long steps,
             const std::function<void(const StepMetrics&)>& on_metrics = nullptr);

  long step() const { return step_; }
  /// Resume support: repositions the schedule and metrics numbering after a
  /// checkpoint load. Rng state is not part of a checkpoint; draws restart.
  void set_step(long step) { step_ = step; }
  const TrainConfig& config() const { return config_; }
  Rng& rng() { return rng_; }
  AdamState& optimizer_state() { return adam_; }

 private:
  Model& model_;
  TrainConfig config_;
  Rng rng_;
  long step_ = 0;
  AdamState adam_;
  nn::Tape tape_;
  std::vector<std::size_t> order_;  // shuffled dataset cursor
  std::size_t cursor_ = 0;
};

/// Deterministic evaluation accuracy: encodes with z = mu (no sampling) and
/// counts argmax(logits) == target over every token of every measure.
AccuracyCount teacher_forced_accuracy(Model& model, const std::vector<Measure>& measures);

}  // namespace midispace
