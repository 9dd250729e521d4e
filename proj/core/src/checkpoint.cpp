#include "midispace/checkpoint.hpp"

#include <bit>
#include <cstring>

#include <json.hpp>

#include "midispace/errors.hpp"
#include "midispace/fsio.hpp"

namespace midispace {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kFormatVersion = 1;

void append_f32(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  out.push_back(static_cast<std::uint8_t>(bits & 0xff));
  out.push_back(static_cast<std::uint8_t>((bits >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((bits >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((bits >> 24) & 0xff));
}

double read_f32(const std::uint8_t* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return static_cast<double>(std::bit_cast<float>(bits));
}

ordered_json tensor_entry(const std::string& name, int rows, int cols, std::size_t offset) {
  ordered_json t;
  t["name"] = name;
  t["rows"] = rows;
  t["cols"] = cols;
  t["offset"] = offset;
  return t;
}

ordered_json config_to_json(const ModelConfig& c) {
  ordered_json j;
  j["vocab_size"] = c.vocab_size;
  j["chord_dim"] = c.chord_dim;
  j["num_tracks"] = c.num_tracks;
  j["max_track_len"] = c.max_track_len;
  j["latent_dim"] = c.latent_dim;
  j["enc_hidden"] = c.enc_hidden;
  j["dec_hidden"] = c.dec_hidden;
  j["dec_layers"] = c.dec_layers;
  j["free_bits"] = c.free_bits;
  return j;
}

ModelConfig config_from_json(const ordered_json& j) {
  ModelConfig c;
  try {
    c.vocab_size = j.at("vocab_size").get<int>();
    c.chord_dim = j.at("chord_dim").get<int>();
    c.num_tracks = j.at("num_tracks").get<int>();
    c.max_track_len = j.at("max_track_len").get<int>();
    c.latent_dim = j.at("latent_dim").get<int>();
    c.enc_hidden = j.at("enc_hidden").get<int>();
    c.dec_hidden = j.at("dec_hidden").get<int>();
    c.dec_layers = j.at("dec_layers").get<int>();
    c.free_bits = j.at("free_bits").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint config: ") + e.what());
  }
  return c;
}

struct ParsedManifest {
  ordered_json manifest;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;
};

ParsedManifest parse_manifest(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4) throw ParseError("checkpoint truncated", 0);
  const std::size_t manifest_len = static_cast<std::size_t>(bytes[0]) |
                                   (static_cast<std::size_t>(bytes[1]) << 8) |
                                   (static_cast<std::size_t>(bytes[2]) << 16) |
                                   (static_cast<std::size_t>(bytes[3]) << 24);
  if (bytes.size() < 4 + manifest_len) throw ParseError("checkpoint truncated", 4);

  ParsedManifest out;
  try {
    out.manifest = ordered_json::parse(bytes.begin() + 4, bytes.begin() + 4 + manifest_len);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }
  const long version = out.manifest.value("format_version", -1L);
  if (version != kFormatVersion)
    throw ParseError("unsupported checkpoint format version " + std::to_string(version));
  out.data = bytes.data() + 4 + manifest_len;
  out.data_len = bytes.size() - 4 - manifest_len;
  return out;
}

void read_tensor(const ParsedManifest& pm, const ordered_json& entry,
                 const std::string& want_name, int want_rows, int want_cols,
                 std::vector<double>& dst) {
  const auto name = entry.at("name").get<std::string>();
  const int rows = entry.at("rows").get<int>();
  const int cols = entry.at("cols").get<int>();
  const std::size_t offset = entry.at("offset").get<std::size_t>();
  if (name != want_name || rows != want_rows || cols != want_cols)
    throw DataError("checkpoint tensor mismatch: have " + name + " [" + std::to_string(rows) +
                    "x" + std::to_string(cols) + "], model wants " + want_name + " [" +
                    std::to_string(want_rows) + "x" + std::to_string(want_cols) + "]");
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  if (offset + 4 * n > pm.data_len)
    throw ParseError("checkpoint data truncated for tensor " + name, offset);
  dst.resize(n);
  for (std::size_t i = 0; i < n; ++i) dst[i] = read_f32(pm.data + offset + 4 * i);
}

}  // namespace

std::vector<std::uint8_t> save_checkpoint(const Model& model, long step,
                                          const AdamState* adam) {
  const auto& params = model.params();
  if (adam && (adam->m.size() != params.size() || adam->v.size() != params.size()))
    throw DataError("optimizer state does not match parameter count");

  std::vector<std::uint8_t> data;
  ordered_json tensors = ordered_json::array();
  for (const auto& p : params) {
    tensors.push_back(tensor_entry(p.name, p.rows, p.cols, data.size()));
    for (double v : p.value) append_f32(data, v);
  }

  ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["step"] = step;
  manifest["config"] = config_to_json(model.config());
  manifest["tensors"] = std::move(tensors);
  if (adam) {
    ordered_json opt;
    opt["t"] = adam->t;
    ordered_json moments = ordered_json::array();
    for (const char* prefix : {"m.", "v."}) {
      const auto& bank = prefix[0] == 'm' ? adam->m : adam->v;
      for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& p = params[i];
        if (bank[i].size() != p.size())
          throw DataError("optimizer moment size does not match " + p.name);
        moments.push_back(tensor_entry(prefix + p.name, p.rows, p.cols, data.size()));
        for (double v : bank[i]) append_f32(data, v);
      }
    }
    opt["tensors"] = std::move(moments);
    manifest["optimizer"] = std::move(opt);
  } else {
    manifest["optimizer"] = nullptr;
  }

  const std::string text = manifest.dump();
  std::vector<std::uint8_t> out;
  out.reserve(4 + text.size() + data.size());
  const auto len = static_cast<std::uint32_t>(text.size());
  out.push_back(static_cast<std::uint8_t>(len & 0xff));
  out.push_back(static_cast<std::uint8_t>((len >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((len >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((len >> 24) & 0xff));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

long load_checkpoint(const std::vector<std::uint8_t>& bytes, Model& model, AdamState* adam) {
  const ParsedManifest pm = parse_manifest(bytes);
  ModelConfig stored = config_from_json(pm.manifest.at("config"));
  // The stored config describes architecture only. The target model's seed
  // shaped an initialization the load is about to overwrite, so it does not
  // participate in the match.
  stored.seed = model.config().seed;
  if (!(stored == model.config()))
    throw DataError("checkpoint config does not match the model");

  auto& params = model.params();
  const auto& tensors = pm.manifest.at("tensors");
  if (!tensors.is_array() || tensors.size() != params.size())
    throw DataError("checkpoint holds " + std::to_string(tensors.size()) +
                    " tensors, model has " + std::to_string(params.size()));
  try {
    for (std::size_t i = 0; i < params.size(); ++i)
      read_tensor(pm, tensors[i], params[i].name, params[i].rows, params[i].cols,
                  params[i].value);

    if (adam) {
      const auto& opt = pm.manifest.at("optimizer");
      if (opt.is_null()) {
        adam->t = 0;
        adam->m.assign(params.size(), {});
        adam->v.assign(params.size(), {});
        for (std::size_t i = 0; i < params.size(); ++i) {
          adam->m[i].assign(params[i].size(), 0.0);
          adam->v[i].assign(params[i].size(), 0.0);
        }
      } else {
        const auto& moments = opt.at("tensors");
        if (!moments.is_array() || moments.size() != 2 * params.size())
          throw DataError("checkpoint optimizer tensor count mismatch");
        adam->t = opt.at("t").get<long>();
        adam->m.resize(params.size());
        adam->v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
          read_tensor(pm, moments[i], "m." + params[i].name, params[i].rows, params[i].cols,
                      adam->m[i]);
          read_tensor(pm, moments[params.size() + i], "v." + params[i].name, params[i].rows,
                      params[i].cols, adam->v[i]);
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }
  long step = 0;
  try {
    step = pm.manifest.at("step").get<long>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }
  return step;
}

CheckpointInfo read_checkpoint_info(const std::vector<std::uint8_t>& bytes) {
  const ParsedManifest pm = parse_manifest(bytes);
  CheckpointInfo info;
  try {
    info.step = pm.manifest.at("step").get<long>();
    info.config = config_from_json(pm.manifest.at("config"));
    info.has_optimizer =
        pm.manifest.contains("optimizer") && !pm.manifest.at("optimizer").is_null();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what());
  }
  return info;
}

void save_checkpoint_file(const std::string& path, const Model& model, long step,
                          const AdamState* adam) {
  write_file(path, save_checkpoint(model, step, adam));
}

long load_checkpoint_file(const std::string& path, Model& model, AdamState* adam) {
  return load_checkpoint(read_file(path), model, adam);
}

CheckpointInfo read_checkpoint_info_file(const std::string& path) {
  return read_checkpoint_info(read_file(path));
}

}  // namespace midispace
