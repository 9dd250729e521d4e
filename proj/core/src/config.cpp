#include "midispace/config.hpp"

#include <algorithm>

#include <json.hpp>

#include "midispace/errors.hpp"
#include "midispace/fsio.hpp"

namespace midispace {

namespace {

using ordered_json = nlohmann::ordered_json;

/// Strict reader: every key must be claimed by a field.
class ObjectReader {
 public:
  ObjectReader(const ordered_json& j, std::string scope) : j_(j), scope_(std::move(scope)) {
    if (!j.is_object()) throw ConfigError(scope_ + " must be a JSON object");
  }

  template <typename T>
  void field(const char* key, T& out) {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    claimed_.push_back(key);
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("bad value for " + scope_ + "." + key);
    }
  }

  const ordered_json* object(const char* key) {
    const auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    claimed_.push_back(key);
    return &*it;
  }

  /// Number or null; null leaves `set` false.
  void nullable_number(const char* key, bool& set, double& out) {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    claimed_.push_back(key);
    if (it->is_null()) return;
    if (!it->is_number()) throw ConfigError("bad value for " + scope_ + "." + key);
    set = true;
    out = it->get<double>();
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (std::find(claimed_.begin(), claimed_.end(), key) == claimed_.end())
        throw ConfigError("unknown config key: " + scope_ + "." + key);
    }
  }

 private:
  const ordered_json& j_;
  std::string scope_;
  std::vector<std::string> claimed_;
};

void read_model(const ordered_json& j, ModelConfig& c) {
  ObjectReader r(j, "model");
  r.field("vocab_size", c.vocab_size);
  r.field("chord_dim", c.chord_dim);
  r.field("num_tracks", c.num_tracks);
  r.field("max_track_len", c.max_track_len);
  r.field("latent_dim", c.latent_dim);
  r.field("enc_hidden", c.enc_hidden);
  r.field("dec_hidden", c.dec_hidden);
  r.field("dec_layers", c.dec_layers);
  r.field("free_bits", c.free_bits);
  r.finish();
}

void read_train(const ordered_json& j, TrainConfig& c) {
  ObjectReader r(j, "train");
  r.field("batch_size", c.batch_size);
  r.field("lr_start", c.lr_start);
  r.field("lr_floor", c.lr_floor);
  r.field("lr_decay", c.lr_decay);
  r.field("max_steps", c.max_steps);
  r.field("augment", c.augment);
  r.finish();
}

void read_chords(const ordered_json& j, chords::ChordInferenceParams& c) {
  ObjectReader r(j, "chords");
  r.field("gamma", c.gamma);
  r.field("rho", c.rho);
  r.field("psi", c.psi);
  r.field("kappa", c.kappa);
  r.field("max_measures", c.max_measures);
  r.field("frames_per_measure", c.frames_per_measure);
  r.finish();
}

void read_paths(const ordered_json& j, RunConfig& c) {
  ObjectReader r(j, "paths");
  r.field("input_dir", c.input_dir);
  r.field("dataset", c.dataset_path);
  r.field("checkpoint", c.checkpoint_path);
  r.field("output_dir", c.output_dir);
  r.finish();
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  ordered_json j;
  try {
    j = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  RunConfig c;
  ObjectReader r(j, "config");
  if (const auto* o = r.object("model")) read_model(*o, c.model);
  if (const auto* o = r.object("train")) read_train(*o, c.train);
  if (const auto* o = r.object("chords")) read_chords(*o, c.chords);
  if (const auto* o = r.object("paths")) read_paths(*o, c);
  r.field("seed", c.seed);
  r.field("temperature", c.temperature);
  r.field("attr_scale", c.attr_scale);
  r.nullable_number("attr_threshold", c.attr_threshold_set, c.attr_threshold);
  r.finish();

  c.model.seed = c.seed;
  c.train.seed = c.seed;
  if (c.temperature < 0.0) throw ConfigError("temperature must be >= 0");
  return c;
}

RunConfig load_run_config(const std::string& path) {
  return parse_run_config(read_text_file(path));
}

std::string run_config_to_json(const RunConfig& c) {
  ordered_json j;
  j["model"] = {{"vocab_size", c.model.vocab_size},   {"chord_dim", c.model.chord_dim},
                {"num_tracks", c.model.num_tracks},   {"max_track_len", c.model.max_track_len},
                {"latent_dim", c.model.latent_dim},   {"enc_hidden", c.model.enc_hidden},
                {"dec_hidden", c.model.dec_hidden},   {"dec_layers", c.model.dec_layers},
                {"free_bits", c.model.free_bits}};
  j["train"] = {{"batch_size", c.train.batch_size}, {"lr_start", c.train.lr_start},
                {"lr_floor", c.train.lr_floor},     {"lr_decay", c.train.lr_decay},
                {"max_steps", c.train.max_steps},   {"augment", c.train.augment}};
  j["chords"] = {{"gamma", c.chords.gamma},
                 {"rho", c.chords.rho},
                 {"psi", c.chords.psi},
                 {"kappa", c.chords.kappa},
                 {"max_measures", c.chords.max_measures},
                 {"frames_per_measure", c.chords.frames_per_measure}};
  j["paths"] = {{"input_dir", c.input_dir},
                {"dataset", c.dataset_path},
                {"checkpoint", c.checkpoint_path},
                {"output_dir", c.output_dir}};
  j["seed"] = c.seed;
  j["temperature"] = c.temperature;
  j["attr_scale"] = c.attr_scale;
  if (c.attr_threshold_set)
    j["attr_threshold"] = c.attr_threshold;
  else
    j["attr_threshold"] = nullptr;
  return j.dump(2);
}

}  // namespace midispace
