#include "midispace/model.hpp"

#include <algorithm>
#include <cmath>

#include "midispace/errors.hpp"

namespace midispace {

namespace {
constexpr double kLn2 = 0.6931471805599453;
}

std::vector<std::uint8_t> chord_per_step(const TokenSeq& tokens,
                                         const std::array<std::uint8_t, 2>& chords) {
  std::vector<std::uint8_t> out(tokens.size());
  int cum = 0;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    out[t] = chords[cum >= kStepsPerMeasure / 2 ? 1 : 0];
    const Event e = event_from_token(tokens[t]);
    if (e.kind == EventKind::TimeShift) cum += e.value;
  }
  return out;
}

Model::Model(const ModelConfig& config) : config_(config) {
  if (config.vocab_size <= 0 || config.chord_dim <= 0 || config.num_tracks <= 0 ||
      config.latent_dim <= 0 || config.enc_hidden <= 0 || config.dec_hidden <= 0 ||
      config.dec_layers <= 0 || config.max_track_len < 1)
    throw ConfigError("model dimensions must be positive");

  Rng rng(config.seed);
  const int he = config.enc_hidden, hd = config.dec_hidden, ld = config.latent_dim;
  const int v = config.vocab_size, c = config.chord_dim;

  const char* dirs[2] = {"fwd", "bwd"};
  for (int d = 0; d < 2; ++d) {
    const std::string p = std::string("enc1_") + dirs[d];
    enc1_w_event_[d] = &make_param(p + ".w_event", 4 * he, v, rng);
    enc1_w_chord_[d] = &make_param(p + ".w_chord", 4 * he, c, rng);
    enc1_[d].w_h = &make_param(p + ".w_h", 4 * he, he, rng);
    enc1_[d].b = &make_param(p + ".b", 4 * he, 1, rng, true);
  }
  for (int d = 0; d < 2; ++d) {
    const std::string p = std::string("enc2_") + dirs[d];
    enc2_w_x_[d] = &make_param(p + ".w_x", 4 * he, 2 * he, rng);
    enc2_[d].w_h = &make_param(p + ".w_h", 4 * he, he, rng);
    enc2_[d].b = &make_param(p + ".b", 4 * he, 1, rng, true);
  }
  head_mu_w_ = &make_param("head_mu.w", ld, 2 * he, rng);
  head_mu_b_ = &make_param("head_mu.b", ld, 1, rng);
  head_sigma_w_ = &make_param("head_sigma.w", ld, 2 * he, rng);
  head_sigma_b_ = &make_param("head_sigma.b", ld, 1, rng);

  cond_init_w_ = &make_param("cond_init.w", 2 * hd, ld, rng);
  cond_init_b_ = &make_param("cond_init.b", 2 * hd, 1, rng);
  cond_.w_h = &make_param("cond.w_h", 4 * hd, hd, rng);
  cond_.b = &make_param("cond.b", 4 * hd, 1, rng, true);

  dec_init_w_ = &make_param("dec_init.w", 2 * hd * config.dec_layers, hd, rng);
  dec_init_b_ = &make_param("dec_init.b", 2 * hd * config.dec_layers, 1, rng);
  dec0_w_event_ = &make_param("dec0.w_event", 4 * hd, v, rng);
  dec0_w_emb_ = &make_param("dec0.w_emb", 4 * hd, hd, rng);
  dec0_w_chord_ = &make_param("dec0.w_chord", 4 * hd, c, rng);
  dec0_.w_h = &make_param("dec0.w_h", 4 * hd, hd, rng);
  dec0_.b = &make_param("dec0.b", 4 * hd, 1, rng, true);
  for (int l = 1; l < config.dec_layers; ++l) {
    const std::string p = "dec" + std::to_string(l);
    dec_upper_w_x_.push_back(&make_param(p + ".w_x", 4 * hd, hd, rng));
    Cell cell;
    cell.w_h = &make_param(p + ".w_h", 4 * hd, hd, rng);
    cell.b = &make_param(p + ".b", 4 * hd, 1, rng, true);
    dec_upper_.push_back(cell);
  }
  out_w_ = &make_param("out.w", v, hd, rng);
  out_b_ = &make_param("out.b", v, 1, rng);
}

nn::Param& Model::make_param(const std::string& name, int rows, int cols, Rng& rng,
                             bool lstm_bias) {
  params_.emplace_back(name, rows, cols);
  nn::Param& p = params_.back();
  if (cols > 1) {
    // Xavier uniform
    const double a = std::sqrt(6.0 / (rows + cols));
    for (double& x : p.value) x = (2.0 * rng.uniform() - 1.0) * a;
  } else if (lstm_bias) {
    // forget-gate bias 1 encourages long memory at init
    const int h = rows / 4;
    for (int i = h; i < 2 * h; ++i) p.value[i] = 1.0;
  }
  return p;
}

void Model::zero_grads() {
  for (auto& p : params_) p.zero_grad();
}

nn::NodeId Model::lstm_step(nn::Tape& tape, const Cell& cell, nn::NodeId gates_in,
                            nn::NodeId h_prev, nn::NodeId c_prev) {
  nn::NodeId gates = tape.affine(*cell.w_h, h_prev, *cell.b);
  if (gates_in >= 0) gates = tape.add(gates_in, gates);
  return tape.lstm_cell(gates, c_prev);
}

PosteriorNodes Model::encode(nn::Tape& tape, const Measure& measure) {
  const int he = config_.enc_hidden;
  const nn::NodeId zero = tape.constant(std::vector<double>(he, 0.0));

  std::vector<nn::NodeId> embeddings(config_.num_tracks);
  for (int k = 0; k < config_.num_tracks; ++k) {
    const TokenSeq& tokens = measure.tracks[k];
    const int len = static_cast<int>(tokens.size());
    if (len == 0) throw DataError("empty track sequence in slot " + std::to_string(k));
    if (len > config_.max_track_len)
      throw DataError("track exceeds max length " + std::to_string(config_.max_track_len));
    const auto chords_at = chord_per_step(tokens, measure.chords);

    nn::NodeId finals[2];
    for (int d = 0; d < 2; ++d) {
      nn::NodeId h = zero, c = zero;
      for (int idx = 0; idx < len; ++idx) {
        const int t = d == 0 ? idx : len - 1 - idx;
        const nn::NodeId gates_in = tape.add(tape.col(*enc1_w_event_[d], tokens[t]),
                                             tape.col(*enc1_w_chord_[d], chords_at[t]));
        const nn::NodeId hc = lstm_step(tape, enc1_[d], gates_in, h, c);
        h = tape.slice(hc, 0, he);
        c = tape.slice(hc, he, he);
      }
      finals[d] = h;
    }
    embeddings[k] = tape.concat(finals[0], finals[1]);
  }

  nn::NodeId finals2[2];
  for (int d = 0; d < 2; ++d) {
    nn::NodeId h = zero, c = zero;
    for (int idx = 0; idx < config_.num_tracks; ++idx) {
      const int k = d == 0 ? idx : config_.num_tracks - 1 - idx;
      const nn::NodeId gates_in = tape.matvec(*enc2_w_x_[d], embeddings[k]);
      const nn::NodeId hc = lstm_step(tape, enc2_[d], gates_in, h, c);
      h = tape.slice(hc, 0, he);
      c = tape.slice(hc, he, he);
    }
    finals2[d] = h;
  }
  const nn::NodeId hh = tape.concat(finals2[0], finals2[1]);

  PosteriorNodes post;
  post.mu = tape.affine(*head_mu_w_, hh, *head_mu_b_);
  post.sigma = tape.softplus(tape.affine(*head_sigma_w_, hh, *head_sigma_b_));
  return post;
}

nn::NodeId Model::reparameterize(nn::Tape& tape, const PosteriorNodes& post,
                                 const std::vector<double>& eps) {
  if (static_cast<int>(eps.size()) != config_.latent_dim)
    throw DataError("eps length does not match latent_dim");
  return tape.add(post.mu, tape.cmul(post.sigma, eps));
}

nn::NodeId Model::reparameterize(nn::Tape& tape, const PosteriorNodes& post, Rng& rng) {
  std::vector<double> eps(config_.latent_dim);
  for (double& e : eps) e = rng.normal();
  return reparameterize(tape, post, eps);
}

std::vector<nn::NodeId> Model::conductor_embeddings(nn::Tape& tape, nn::NodeId z) {
  const int hd = config_.dec_hidden;
  const nn::NodeId init = tape.tanh_(tape.affine(*cond_init_w_, z, *cond_init_b_));
  nn::NodeId h = tape.slice(init, 0, hd);
  nn::NodeId c = tape.slice(init, hd, hd);
  std::vector<nn::NodeId> embeddings(config_.num_tracks);
  for (int k = 0; k < config_.num_tracks; ++k) {
    const nn::NodeId hc = lstm_step(tape, cond_, -1, h, c);
    h = tape.slice(hc, 0, hd);
    c = tape.slice(hc, hd, hd);
    embeddings[k] = h;
  }
  return embeddings;
}

std::vector<std::vector<nn::NodeId>> Model::decode_teacher_forced(nn::Tape& tape,
                                                                  nn::NodeId z,
                                                                  const Measure& measure) {
  const int hd = config_.dec_hidden;
  const auto embeddings = conductor_embeddings(tape, z);

  std::vector<std::vector<nn::NodeId>> logits(config_.num_tracks);
  for (int k = 0; k < config_.num_tracks; ++k) {
    const TokenSeq& tokens = measure.tracks[k];
    const int len = static_cast<int>(tokens.size());
    if (len == 0) throw DataError("empty track sequence in slot " + std::to_string(k));
    if (len > config_.max_track_len)
      throw DataError("track exceeds max length " + std::to_string(config_.max_track_len));
    const auto chords_at = chord_per_step(tokens, measure.chords);

    const nn::NodeId dinit =
        tape.tanh_(tape.affine(*dec_init_w_, embeddings[k], *dec_init_b_));
    std::vector<nn::NodeId> hs(config_.dec_layers), cs(config_.dec_layers);
    for (int l = 0; l < config_.dec_layers; ++l) {
      hs[l] = tape.slice(dinit, l * 2 * hd, hd);
      cs[l] = tape.slice(dinit, l * 2 * hd + hd, hd);
    }
    const nn::NodeId temb = tape.matvec(*dec0_w_emb_, embeddings[k]);

    logits[k].resize(len);
    for (int t = 0; t < len; ++t) {
      nn::NodeId gates_in = tape.add(temb, tape.col(*dec0_w_chord_, chords_at[t]));
      if (t > 0) gates_in = tape.add(gates_in, tape.col(*dec0_w_event_, tokens[t - 1]));
      nn::NodeId hc = lstm_step(tape, dec0_, gates_in, hs[0], cs[0]);
      hs[0] = tape.slice(hc, 0, hd);
      cs[0] = tape.slice(hc, hd, hd);
      nn::NodeId x = hs[0];
      for (int l = 1; l < config_.dec_layers; ++l) {
        const nn::NodeId up = tape.matvec(*dec_upper_w_x_[l - 1], x);
        hc = lstm_step(tape, dec_upper_[l - 1], up, hs[l], cs[l]);
        hs[l] = tape.slice(hc, 0, hd);
        cs[l] = tape.slice(hc, hd, hd);
        x = hs[l];
      }
      logits[k][t] = tape.affine(*out_w_, x, *out_b_);
    }
  }
  return logits;
}

LossNodes Model::loss(nn::Tape& tape, const std::vector<std::vector<nn::NodeId>>& logits,
                      const Measure& measure, const PosteriorNodes& post, double tau_bits) {
  if (static_cast<int>(logits.size()) != config_.num_tracks)
    throw DataError("logits track count mismatch");

  nn::NodeId recon = -1;
  for (int k = 0; k < config_.num_tracks; ++k) {
    const TokenSeq& tokens = measure.tracks[k];
    if (logits[k].size() != tokens.size()) throw DataError("logits length mismatch");
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      const nn::NodeId term = tape.softmax_xent(logits[k][t], tokens[t]);
      recon = recon < 0 ? term : tape.add(recon, term);
    }
  }

  const nn::NodeId neg_log_sigma = tape.scale(tape.log_(post.sigma), -1.0);
  const nn::NodeId squares =
      tape.add(tape.mul(post.sigma, post.sigma), tape.mul(post.mu, post.mu));
  const nn::NodeId per_dim =
      tape.shift(tape.add(neg_log_sigma, tape.scale(squares, 0.5)), -0.5);
  const nn::NodeId kl = tape.sum(per_dim);

  const nn::NodeId hinge = tape.relu(tape.shift(kl, -tau_bits * kLn2));
  LossNodes out;
  out.recon = recon;
  out.kl = kl;
  out.total = tape.add(recon, hinge);
  return out;
}

PosteriorValues Model::encode_values(const Measure& measure) {
  nn::Tape tape;
  const PosteriorNodes post = encode(tape, measure);
  PosteriorValues out;
  out.mu = tape.value_vec(post.mu);
  out.sigma = tape.value_vec(post.sigma);
  return out;
}

Measure Model::sample_decode(const std::vector<double>& z,
                             const std::array<std::uint8_t, 2>& chords, double temperature,
                             Rng& rng) {
  if (static_cast<int>(z.size()) != config_.latent_dim)
    throw DataError("latent size does not match latent_dim");
  if (temperature < 0.0) throw DataError("temperature must be non-negative");

  const int hd = config_.dec_hidden;
  const int v = config_.vocab_size;
  nn::Tape tape;
  const nn::NodeId z_node = tape.constant(z);
  const auto embeddings = conductor_embeddings(tape, z_node);

  Measure m;
  m.chords = chords;
  for (int k = 0; k < config_.num_tracks; ++k) {
    const nn::NodeId dinit =
        tape.tanh_(tape.affine(*dec_init_w_, embeddings[k], *dec_init_b_));
    std::vector<nn::NodeId> hs(config_.dec_layers), cs(config_.dec_layers);
    for (int l = 0; l < config_.dec_layers; ++l) {
      hs[l] = tape.slice(dinit, l * 2 * hd, hd);
      cs[l] = tape.slice(dinit, l * 2 * hd + hd, hd);
    }
    const nn::NodeId temb = tape.matvec(*dec0_w_emb_, embeddings[k]);

    TokenSeq tokens;
    int cum = 0;
    for (int t = 0; t < config_.max_track_len; ++t) {
      const std::uint8_t chord = chords[cum >= kStepsPerMeasure / 2 ? 1 : 0];
      nn::NodeId gates_in = tape.add(temb, tape.col(*dec0_w_chord_, chord));
      if (t > 0) gates_in = tape.add(gates_in, tape.col(*dec0_w_event_, tokens[t - 1]));
      nn::NodeId hc = lstm_step(tape, dec0_, gates_in, hs[0], cs[0]);
      hs[0] = tape.slice(hc, 0, hd);
      cs[0] = tape.slice(hc, hd, hd);
      nn::NodeId x = hs[0];
      for (int l = 1; l < config_.dec_layers; ++l) {
        const nn::NodeId up = tape.matvec(*dec_upper_w_x_[l - 1], x);
        hc = lstm_step(tape, dec_upper_[l - 1], up, hs[l], cs[l]);
        hs[l] = tape.slice(hc, 0, hd);
        cs[l] = tape.slice(hc, hd, hd);
        x = hs[l];
      }
      const nn::NodeId logits = tape.affine(*out_w_, x, *out_b_);
      const double* lv = tape.value(logits);

      Token tok;
      if (t == config_.max_track_len - 1) {
        tok = kTokenEndTrack;  // hard cap
      } else if (temperature == 0.0) {
        int best = 0;
        for (int i = 1; i < v; ++i)
          if (lv[i] > lv[best]) best = i;
        tok = static_cast<Token>(best);
      } else {
        double mx = lv[0];
        for (int i = 1; i < v; ++i) mx = std::max(mx, lv[i]);
        std::vector<double> w(v);
        for (int i = 0; i < v; ++i) w[i] = std::exp((lv[i] - mx) / temperature);
        tok = static_cast<Token>(rng.categorical(w));
      }
      tokens.push_back(tok);
      if (tok == kTokenEndTrack) break;
      const Event e = event_from_token(tok);
      if (e.kind == EventKind::TimeShift) cum = std::min(kStepsPerMeasure, cum + e.value);
    }
    m.tracks[k] = std::move(tokens);
  }
  return m;
}

}  // namespace midispace
