#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <vector>

#include "midispace/events.hpp"
#include "midispace/graph.hpp"
#include "midispace/rng.hpp"

namespace midispace {

struct ModelConfig {
  int vocab_size = kVocabSize;
  int chord_dim = kNumChordClasses;
  int num_tracks = kNumTrackSlots;
  int max_track_len = kMaxTrackTokens;
  int latent_dim = 16;
  int enc_hidden = 64;
  int dec_hidden = 64;
  int dec_layers = 1;
  double free_bits = 64.0;  // bits
  std::uint64_t seed = 0;

  bool operator==(const ModelConfig&) const = default;
};

struct PosteriorNodes {
  nn::NodeId mu = -1;
  nn::NodeId sigma = -1;
};

struct PosteriorValues {
  std::vector<double> mu;
  std::vector<double> sigma;
};

struct LossNodes {
  nn::NodeId recon = -1;
  nn::NodeId kl = -1;
  nn::NodeId total = -1;
};

/// The hierarchical measure VAE. Parameters live in a stable deque so tapes
/// and the optimizer can hold pointers; registration order is the checkpoint
/// tensor order.
class Model {
 public:
  explicit Model(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::deque<nn::Param>& params() { return params_; }
  const std::deque<nn::Param>& params() const { return params_; }
  void zero_grads();

  /// Two bidirectional LSTM levels over the 8 tracks, then the mu head and
  /// the softplus sigma head. Each step's input is the event one-hot plus the
  /// chord one-hot active at that step's cumulative time-shift time.
  PosteriorNodes encode(nn::Tape& tape, const Measure& measure);

  nn::NodeId reparameterize(nn::Tape& tape, const PosteriorNodes& post,
                            const std::vector<double>& eps);
  nn::NodeId reparameterize(nn::Tape& tape, const PosteriorNodes& post, Rng& rng);

  /// Conductor from tanh(linear(z)), 8 embeddings, shared per-track decoder.
  /// Input at step t is the one-hot of target t-1 (zero at t = 0), the track
  /// embedding, and the active chord. Returns logits node per track per step.
  std::vector<std::vector<nn::NodeId>> decode_teacher_forced(nn::Tape& tape, nn::NodeId z,
                                                             const Measure& measure);

  /// recon = summed cross-entropy nats; kl = closed-form KL to the standard
  /// normal; total = recon + max(kl - tau_bits * ln 2, 0).
  LossNodes loss(nn::Tape& tape, const std::vector<std::vector<nn::NodeId>>& logits,
                 const Measure& measure, const PosteriorNodes& post, double tau_bits);

  PosteriorValues encode_values(const Measure& measure);

  Measure sample_decode(const std::vector<double>& z,
                        const std::array<std::uint8_t, 2>& chords, double temperature,
                        Rng& rng);

 private:
  struct Cell {
    nn::Param* w_h = nullptr;
    nn::Param* b = nullptr;
  };
  /// One recurrence step; gates_in = -1 means a null input (conductor).
  /// Returns the stacked [h; c] node.
  nn::NodeId lstm_step(nn::Tape& tape, const Cell& cell, nn::NodeId gates_in,
                       nn::NodeId h_prev, nn::NodeId c_prev);

  nn::Param& make_param(const std::string& name, int rows, int cols, Rng& rng,
                        bool lstm_bias = false);

  std::vector<nn::NodeId> conductor_embeddings(nn::Tape& tape, nn::NodeId z);

  ModelConfig config_;
  std::deque<nn::Param> params_;

  nn::Param* enc1_w_event_[2];
  nn::Param* enc1_w_chord_[2];
  Cell enc1_[2];
  nn::Param* enc2_w_x_[2];
  Cell enc2_[2];
  nn::Param* head_mu_w_;
  nn::Param* head_mu_b_;
  nn::Param* head_sigma_w_;
  nn::Param* head_sigma_b_;
  nn::Param* cond_init_w_;
  nn::Param* cond_init_b_;
  Cell cond_;
  nn::Param* dec_init_w_;
  nn::Param* dec_init_b_;
  nn::Param* dec0_w_event_;
  nn::Param* dec0_w_emb_;
  nn::Param* dec0_w_chord_;
  Cell dec0_;
  std::vector<nn::Param*> dec_upper_w_x_;
  std::vector<Cell> dec_upper_;
  nn::Param* out_w_;
  nn::Param* out_b_;
};

/// Chord index active at each step of a token sequence: chords[1] once the
/// cumulative time-shift of the preceding tokens reaches half a measure.
std::vector<std::uint8_t> chord_per_step(const TokenSeq& tokens,
                                         const std::array<std::uint8_t, 2>& chords);

/// Teacher-forced argmax accuracy of the logits row against the target token.
struct AccuracyCount {
  long correct = 0;
  long total = 0;
  double ratio() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

}  // namespace midispace
