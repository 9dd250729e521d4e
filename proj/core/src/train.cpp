#include "midispace/train.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "midispace/corpus.hpp"
#include "midispace/errors.hpp"

namespace midispace {

double learning_rate(const TrainConfig& config, long step) {
  return std::max(config.lr_floor,
                  config.lr_start * std::pow(config.lr_decay, static_cast<double>(step)));
}

Trainer::Trainer(Model& model, const TrainConfig& config)
    : model_(model), config_(config), rng_(config.seed) {
  if (config.batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (config.lr_floor > config.lr_start) throw ConfigError("lr_floor exceeds lr_start");
  if (config.lr_decay <= 0.0 || config.lr_decay >= 1.0)
    throw ConfigError("lr_decay must be in (0, 1)");
  adam_.m.reserve(model.params().size());
  for (const auto& p : model.params()) {
    adam_.m.emplace_back(p.size(), 0.0);
    adam_.v.emplace_back(p.size(), 0.0);
  }
}

StepMetrics Trainer::train_step(const std::vector<Measure>& batch) {
  if (batch.empty()) throw DataError("empty training batch");
  model_.zero_grads();

  StepMetrics metrics;
  metrics.step = step_;
  metrics.lr = learning_rate(config_, step_);
  long correct = 0, total_tokens = 0;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  for (const Measure& m : batch) {
    tape_.clear();
    const PosteriorNodes post = model_.encode(tape_, m);
    const nn::NodeId z = model_.reparameterize(tape_, post, rng_);
    const auto logits = model_.decode_teacher_forced(tape_, z, m);
    const LossNodes losses =
        model_.loss(tape_, logits, m, post, model_.config().free_bits);

    const double total = *tape_.value(losses.total);
    if (!std::isfinite(total))
      throw std::runtime_error("non-finite loss at step " + std::to_string(step_));
    metrics.recon += *tape_.value(losses.recon) * inv_batch;
    metrics.kl += *tape_.value(losses.kl) * inv_batch;
    metrics.total += total * inv_batch;

    for (int k = 0; k < model_.config().num_tracks; ++k) {
      for (std::size_t t = 0; t < logits[k].size(); ++t) {
        const double* lv = tape_.value(logits[k][t]);
        int best = 0;
        for (int i = 1; i < model_.config().vocab_size; ++i)
          if (lv[i] > lv[best]) best = i;
        correct += best == m.tracks[k][t] ? 1 : 0;
        ++total_tokens;
      }
    }

    tape_.backward(losses.total, inv_batch);
  }
  metrics.accuracy =
      total_tokens == 0 ? 0.0 : static_cast<double>(correct) / total_tokens;

  ++adam_.t;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(adam_.t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(adam_.t));
  std::size_t pi = 0;
  for (auto& p : model_.params()) {
    auto& m = adam_.m[pi];
    auto& v = adam_.v[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      m[i] = kAdamBeta1 * m[i] + (1.0 - kAdamBeta1) * g;
      v[i] = kAdamBeta2 * v[i] + (1.0 - kAdamBeta2) * g * g;
      p.value[i] -= metrics.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + kAdamEps);
    }
    ++pi;
  }

  ++step_;
  return metrics;
}

void Trainer::train(const std::vector<Measure>& dataset, long steps,
                    const std::function<void(const StepMetrics&)>& on_metrics) {
  if (dataset.empty()) throw DataError("empty training dataset");
  std::vector<Measure> batch;
  batch.reserve(config_.batch_size);
  for (long s = 0; s < steps; ++s) {
    batch.clear();
    for (int b = 0; b < config_.batch_size; ++b) {
      if (cursor_ >= order_.size()) {
        order_.resize(dataset.size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
        // Fisher-Yates with the trainer's stream
        for (std::size_t i = order_.size(); i > 1; --i)
          std::swap(order_[i - 1],
                    order_[rng_.uniform_int(0, static_cast<int>(i) - 1)]);
        cursor_ = 0;
      }
      const Measure& m = dataset[order_[cursor_++]];
      if (config_.augment) {
        batch.push_back(transpose_augment(m, rng_.uniform_int(-3, 3)));
      } else {
        batch.push_back(m);
      }
    }
    const StepMetrics metrics = train_step(batch);
    if (on_metrics) on_metrics(metrics);
  }
}

AccuracyCount teacher_forced_accuracy(Model& model, const std::vector<Measure>& measures) {
  AccuracyCount acc;
  nn::Tape tape;
  for (const Measure& m : measures) {
    tape.clear();
    const PosteriorNodes post = model.encode(tape, m);
    const auto logits = model.decode_teacher_forced(tape, post.mu, m);
    for (int k = 0; k < model.config().num_tracks; ++k) {
      for (std::size_t t = 0; t < logits[k].size(); ++t) {
        const double* lv = tape.value(logits[k][t]);
        int best = 0;
        for (int i = 1; i < model.config().vocab_size; ++i)
          if (lv[i] > lv[best]) best = i;
        acc.correct += best == m.tracks[k][t] ? 1 : 0;
        ++acc.total;
      }
    }
  }
  return acc;
}

}  // namespace midispace
