// midispace command-line entry point. Subcommands wire the library into a
// pipeline: ingest MIDI into a dataset, infer chords, train, then sample,
// interpolate, apply attribute vectors, decode progressions and render.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "midispace/checkpoint.hpp"
#include "midispace/chords.hpp"
#include "midispace/config.hpp"
#include "midispace/corpus.hpp"
#include "midispace/errors.hpp"
#include "midispace/fsio.hpp"
#include "midispace/latent.hpp"
#include "midispace/pianoroll.hpp"
#include "midispace/train.hpp"

namespace {

using namespace midispace;
using ordered_json = nlohmann::ordered_json;

constexpr const char* kVersion = "midispace 0.1.0";

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

/// Resolves the effective seed and prints it so every run is replayable.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const RunConfig& config) {
  const std::uint64_t seed = flag ? *flag : config.seed != 0 ? config.seed : entropy_seed();
  std::cout << "seed: " << seed << "\n";
  return seed;
}

void echo_config(const RunConfig& config, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  write_text_file((std::filesystem::path(out_dir) / "effective_config.json").string(),
                  run_config_to_json(config));
}

/// Measures of every 4/4 segment of one MIDI file, chords inferred.
std::vector<Measure> ingest_file(const std::string& path,
                                 const chords::ChordInferenceParams& params) {
  const auto segments = segment_by_meter(parse_smf(read_file(path)));
  std::vector<Measure> out;
  for (const auto& segment : segments) {
    const auto raws = split_measures(segment);
    if (raws.empty() || static_cast<int>(raws.size()) > params.max_measures) continue;
    std::vector<std::vector<QuantizedNote>> harmony_notes(raws.size());
    for (std::size_t i = 0; i < raws.size(); ++i)
      for (const auto& n : raws[i])
        if (!n.is_drum)
          harmony_notes[i].push_back(
              {n.pitch, n.onset_step, n.duration_steps, quantize_velocity(n.velocity)});
    const auto harmony = chords::infer_chords(harmony_notes, params);
    for (std::size_t i = 0; i < raws.size(); ++i) {
      auto res = extract_tracks(raws[i]);
      if (res.reason != DiscardReason::None) continue;
      res.measure.chords = harmony.measure_chords[i];
      out.push_back(std::move(res.measure));
    }
  }
  return out;
}

Measure first_measure(const std::string& path, const chords::ChordInferenceParams& params) {
  auto measures = ingest_file(path, params);
  if (measures.empty()) throw DataError("no usable measure in " + path);
  return measures.front();
}

/// Measures for display: same segmentation and chord pass as ingest, but
/// none of the corpus gates. Any track count renders; past eight groups the
/// highest programs are dropped instead of discarding the measure.
std::vector<Measure> viewer_measures(const std::string& path,
                                     const chords::ChordInferenceParams& params) {
  const auto segments = segment_by_meter(parse_smf(read_file(path)));
  std::vector<Measure> out;
  for (const auto& segment : segments) {
    const auto raws = split_measures(segment);
    if (raws.empty() || static_cast<int>(raws.size()) > params.max_measures) continue;
    std::vector<std::vector<QuantizedNote>> harmony_notes(raws.size());
    for (std::size_t i = 0; i < raws.size(); ++i)
      for (const auto& n : raws[i])
        if (!n.is_drum)
          harmony_notes[i].push_back(
              {n.pitch, n.onset_step, n.duration_steps, quantize_velocity(n.velocity)});
    const auto harmony = chords::infer_chords(harmony_notes, params);
    for (std::size_t i = 0; i < raws.size(); ++i) {
      std::map<std::pair<int, int>, std::vector<QuantizedNote>> groups;
      for (const auto& n : raws[i])
        groups[{n.is_drum ? kDrumProgram : n.program, n.source_track}].push_back(
            {n.pitch, n.onset_step, n.duration_steps, quantize_velocity(n.velocity)});
      std::vector<TrackContent> contents;
      for (auto& [key, notes] : groups) {
        if (contents.size() == static_cast<std::size_t>(kNumTrackSlots)) break;
        contents.push_back({std::move(notes), key.first});
      }
      out.push_back(encode_measure(contents, harmony.measure_chords[i]));
    }
  }
  return out;
}

std::vector<std::uint8_t> parse_progression(const std::string& text) {
  std::vector<std::uint8_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    if (first == std::string::npos) throw DataError("empty chord name in progression");
    const auto name = item.substr(first, last - first + 1);
    const auto chord = chords::parse_chord_name(name);
    if (!chord) throw DataError("unknown chord name: " + name);
    out.push_back(*chord);
  }
  return out;
}

Model load_model(const std::string& checkpoint_path) {
  const auto bytes = read_file(checkpoint_path);
  Model model(read_checkpoint_info(bytes).config);
  load_checkpoint(bytes, model);
  return model;
}

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> temperature;

  RunConfig load() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (temperature) c.temperature = *temperature;
    return c;
  }
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_temperature = true) {
  cmd->add_option("--config", opts.config_path, "JSON run configuration");
  cmd->add_option("--seed", opts.seed, "RNG seed (default: entropy, printed)");
  if (with_temperature)
    cmd->add_option("--temperature", opts.temperature, "Sampling temperature (default 0.2)");
}

int cmd_ingest(const CommonOpts& common, const std::string& input_dir,
               const std::string& out_path, const std::string& stats_path) {
  RunConfig config = common.load();
  config.input_dir = input_dir;
  config.dataset_path = out_path;
  BuildConfig bc;
  bc.chord_params = config.chords;
  bc.seed = common.seed.value_or(config.seed);
  const DatasetStats stats = build_dataset(input_dir, out_path, bc);
  const std::string text = stats_to_json(stats);
  if (!stats_path.empty()) write_text_file(stats_path, text);
  std::cout << text << "\n";
  const auto dir = std::filesystem::path(out_path).parent_path();
  if (!dir.empty()) echo_config(config, dir.string());
  return 0;
}

int cmd_chords(const CommonOpts& common, const std::string& input, const std::string& out) {
  const RunConfig config = common.load();
  const auto segments = segment_by_meter(parse_smf(read_file(input)));
  static constexpr const char* kKeyNames[12] = {"C",  "C#", "D",  "D#", "E",  "F",
                                                "F#", "G",  "G#", "A",  "A#", "B"};
  ordered_json doc;
  doc["file"] = input;
  doc["segments"] = ordered_json::array();
  for (const auto& segment : segments) {
    const auto raws = split_measures(segment);
    if (raws.empty()) continue;
    if (static_cast<int>(raws.size()) > config.chords.max_measures)
      throw DataError("segment exceeds max_measures");
    std::vector<std::vector<QuantizedNote>> notes(raws.size());
    for (std::size_t i = 0; i < raws.size(); ++i)
      for (const auto& n : raws[i])
        if (!n.is_drum)
          notes[i].push_back(
              {n.pitch, n.onset_step, n.duration_steps, quantize_velocity(n.velocity)});
    const auto harmony = chords::infer_chords(notes, config.chords);

    ordered_json seg;
    seg["start_tick"] = segment.start_tick;
    seg["measures"] = ordered_json::array();
    for (std::size_t i = 0; i < raws.size(); ++i) {
      ordered_json m;
      m["chords"] = {harmony.measure_chords[i][0], harmony.measure_chords[i][1]};
      m["names"] = {chords::chord_name(harmony.measure_chords[i][0]),
                    chords::chord_name(harmony.measure_chords[i][1])};
      m["keys"] = {kKeyNames[harmony.diagnostics[i][0].key],
                   kKeyNames[harmony.diagnostics[i][1].key]};
      m["full_chords"] = {chords::full_chord_name(harmony.diagnostics[i][0].chord),
                         chords::full_chord_name(harmony.diagnostics[i][1].chord)};
      seg["measures"].push_back(std::move(m));
    }
    doc["segments"].push_back(std::move(seg));
  }
  const std::string text = doc.dump(2);
  if (!out.empty())
    write_text_file(out, text);
  else
    std::cout << text << "\n";
  return 0;
}

int cmd_train(const CommonOpts& common, const std::string& dataset_path,
              const std::string& out_dir, std::optional<long> steps,
              const std::string& resume) {
  RunConfig config = common.load();
  config.dataset_path = dataset_path;
  config.output_dir = out_dir;
  config.seed = resolve_seed(common.seed, config);
  config.model.seed = config.seed;
  config.train.seed = config.seed;
  if (steps) config.train.max_steps = *steps;

  const auto dataset = read_dataset(dataset_path);
  if (dataset.empty()) throw DataError("dataset is empty: " + dataset_path);

  Model model(config.model);
  Trainer trainer(model, config.train);
  long start_step = 0;
  if (!resume.empty()) {
    start_step = load_checkpoint(read_file(resume), model, &trainer.optimizer_state());
    trainer.set_step(start_step);
    std::cout << "resumed from step " << start_step << "\n";
  }

  std::filesystem::create_directories(out_dir);
  echo_config(config, out_dir);
  std::ofstream metrics((std::filesystem::path(out_dir) / "metrics.jsonl").string());
  const long todo = config.train.max_steps - start_step;
  if (todo <= 0) throw DataError("checkpoint already at or past max_steps");

  trainer.train(dataset, todo, [&](const StepMetrics& m) {
    ordered_json j;
    j["step"] = m.step;
    j["recon"] = m.recon;
    j["kl"] = m.kl;
    j["total"] = m.total;
    j["lr"] = m.lr;
    j["accuracy"] = m.accuracy;
    metrics << j.dump() << "\n";
    if (m.step % 100 == 0)
      std::cout << "step " << m.step << " total " << m.total << " accuracy " << m.accuracy
                << "\n";
  });

  const auto ckpt = (std::filesystem::path(out_dir) / "model.ckpt").string();
  save_checkpoint_file(ckpt, model, trainer.step(), &trainer.optimizer_state());
  std::cout << "checkpoint: " << ckpt << "\n";
  return 0;
}

int cmd_sample(const CommonOpts& common, const std::string& checkpoint_path,
               const std::string& out_dir, int count, const std::string& chords_text) {
  RunConfig config = common.load();
  config.checkpoint_path = checkpoint_path;
  config.output_dir = out_dir;
  config.seed = resolve_seed(common.seed, config);
  Model model = load_model(checkpoint_path);

  std::array<std::uint8_t, 2> chord_pair = {0, 0};
  if (!chords_text.empty()) {
    const auto prog = parse_progression(chords_text);
    if (prog.size() != 2) throw DataError("sample takes exactly 2 chords");
    chord_pair = {prog[0], prog[1]};
  }

  std::filesystem::create_directories(out_dir);
  echo_config(config, out_dir);
  Rng rng(config.seed);
  for (int i = 0; i < count; ++i) {
    const auto z = sample_prior(model.config().latent_dim, rng);
    const Measure m = model.sample_decode(z, chord_pair, config.temperature, rng);
    const auto path = (std::filesystem::path(out_dir) / ("sample_" + std::to_string(i) + ".mid"))
                          .string();
    write_file(path, write_smf({m}));
    std::cout << path << "\n";
  }
  return 0;
}

int cmd_interp(const CommonOpts& common, const std::string& a_path, const std::string& b_path,
               int steps, const std::string& checkpoint_path, const std::string& out_dir) {
  RunConfig config = common.load();
  config.checkpoint_path = checkpoint_path;
  config.output_dir = out_dir;
  config.seed = resolve_seed(common.seed, config);
  Model model = load_model(checkpoint_path);

  const Measure a = first_measure(a_path, config.chords);
  const Measure b = first_measure(b_path, config.chords);
  Rng rng(config.seed);
  const auto path = interpolate_measures(model, a, b, steps, config.temperature, rng);

  std::filesystem::create_directories(out_dir);
  echo_config(config, out_dir);
  const auto merged = (std::filesystem::path(out_dir) / "interpolation.mid").string();
  write_file(merged, write_smf(path));
  std::cout << merged << "\n";
  return 0;
}

int cmd_attr(const CommonOpts& common, const std::string& name, double scale,
             const std::string& dataset_path, const std::string& checkpoint_path,
             const std::string& input, const std::string& out_dir) {
  RunConfig config = common.load();
  config.dataset_path = dataset_path;
  config.checkpoint_path = checkpoint_path;
  config.output_dir = out_dir;
  config.seed = resolve_seed(common.seed, config);
  Model model = load_model(checkpoint_path);
  const auto dataset = read_dataset(dataset_path);
  if (dataset.empty()) throw DataError("dataset is empty: " + dataset_path);

  // numeric predicates split at the configured threshold, default the median
  std::function<double(const Measure&)> value;
  if (name == "pitch_range")
    value = [](const Measure& m) { return pitch_range(m); };
  else if (name == "track_count")
    value = [](const Measure& m) { return track_count(m); };
  else if (name == "note_density")
    value = [](const Measure& m) { return note_density(m); };
  else if (name == "strings_only")
    value = [](const Measure& m) { return strings_only(m) ? 1.0 : 0.0; };
  else
    throw ConfigError("unknown attribute: " + name);

  double threshold = 0.5;
  if (name != "strings_only") {
    if (config.attr_threshold_set) {
      threshold = config.attr_threshold;
    } else {
      std::vector<double> values;
      for (const auto& m : dataset) values.push_back(value(m));
      std::sort(values.begin(), values.end());
      threshold = values[values.size() / 2];  // median split
    }
  }

  std::vector<Measure> with_set, without_set;
  for (const auto& m : dataset)
    (value(m) > threshold ? with_set : without_set).push_back(m);
  if (with_set.empty() || without_set.empty())
    throw DataError("threshold " + std::to_string(threshold) + " does not split the dataset");

  const auto vec = attribute_vector(model, with_set, without_set, name);
  const Measure x = first_measure(input, config.chords);
  Rng rng(config.seed);
  const Measure shifted = apply_attribute(model, x, vec, scale, config.temperature, rng);

  std::filesystem::create_directories(out_dir);
  echo_config(config, out_dir);
  const auto before = (std::filesystem::path(out_dir) / "before.mid").string();
  const auto after = (std::filesystem::path(out_dir) / "after.mid").string();
  write_file(before, write_smf({x}));
  write_file(after, write_smf({shifted}));
  std::cout << "attribute " << name << " threshold " << threshold << " with/without "
            << vec.n_with << "/" << vec.n_without << "\n"
            << after << "\n";
  return 0;
}

int cmd_progression(const CommonOpts& common, const std::string& z_path,
                    const std::string& chords_text, const std::string& checkpoint_path,
                    const std::string& out_path) {
  RunConfig config = common.load();
  config.checkpoint_path = checkpoint_path;
  config.seed = resolve_seed(common.seed, config);
  Model model = load_model(checkpoint_path);

  std::vector<double> z;
  if (z_path.empty()) {
    Rng zrng(config.seed);
    z = sample_prior(model.config().latent_dim, zrng);
  } else {
    ordered_json j;
    try {
      j = ordered_json::parse(read_text_file(z_path));
      z = j.get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("latent file " + z_path + ": " + e.what());
    }
  }

  const auto progression = parse_progression(chords_text);
  Rng rng(config.seed + 1);
  const auto measures = decode_progression(model, z, progression, config.temperature, rng);
  write_file(out_path, write_smf(measures));
  std::cout << out_path << "\n";
  return 0;
}

int cmd_render(const CommonOpts& common, const std::string& input, const std::string& out,
               bool strip_drums, bool strip_octaves, const std::string& format) {
  const RunConfig config = common.load();
  RenderOptions options;
  options.format = parse_render_format(format);
  options.strip_drums = strip_drums;
  options.strip_octaves = strip_octaves;

  std::vector<Measure> measures;
  if (input.size() > 6 && input.substr(input.size() - 6) == ".jsonl")
    measures = read_dataset(input);
  else
    measures = viewer_measures(input, config.chords);
  if (measures.empty()) throw DataError("no measures to render in " + input);
  write_text_file(out, render_measures(measures, options));
  std::cout << out << "\n";
  return 0;
}

int cmd_stats(const std::string& dataset_path) {
  const auto dataset = read_dataset(dataset_path);
  std::array<long, kNumTrackSlots + 1> track_hist{};
  std::array<long, kNumChordClasses> chord_hist{};
  long tokens = 0;
  for (const auto& m : dataset) {
    track_hist[track_count(m)] += 1;
    chord_hist[m.chords[0]] += 1;
    chord_hist[m.chords[1]] += 1;
    for (const auto& t : m.tracks) tokens += static_cast<long>(t.size());
  }
  ordered_json j;
  j["measures"] = dataset.size();
  j["tokens"] = tokens;
  j["tracks_histogram"] = track_hist;
  ordered_json ch = ordered_json::object();
  for (int c = 0; c < kNumChordClasses; ++c)
    if (chord_hist[c] > 0) ch[chords::chord_name(static_cast<std::uint8_t>(c))] = chord_hist[c];
  j["chord_histogram"] = std::move(ch);
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multitrack measure VAE pipeline"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(0, 1);

  CommonOpts common;

  auto* ingest = app.add_subcommand("ingest", "Build a dataset from a directory of MIDI files");
  std::string in_dir, out_path, stats_path;
  ingest->add_option("--input", in_dir, "Directory of .mid files")->required();
  ingest->add_option("--out", out_path, "Output dataset (JSON lines)")->required();
  ingest->add_option("--stats", stats_path, "Write ingest statistics JSON here");
  add_common(ingest, common, false);

  auto* chords_cmd = app.add_subcommand("chords", "Infer chords and keys for a MIDI file");
  std::string chords_in, chords_out;
  chords_cmd->add_option("--input", chords_in, "Input .mid file")->required();
  chords_cmd->add_option("--out", chords_out, "Output JSON (default stdout)");
  add_common(chords_cmd, common, false);

  auto* train = app.add_subcommand("train", "Train the measure VAE on a dataset");
  std::string train_dataset, train_out, train_resume;
  std::optional<long> train_steps;
  train->add_option("--dataset", train_dataset, "Dataset JSON lines")->required();
  train->add_option("--out", train_out, "Output directory")->required();
  train->add_option("--steps", train_steps, "Total optimization steps");
  train->add_option("--resume", train_resume, "Checkpoint to resume from");
  add_common(train, common, false);

  auto* sample = app.add_subcommand("sample", "Sample measures from the prior");
  std::string sample_ckpt, sample_out, sample_chords;
  int sample_count = 1;
  sample->add_option("--checkpoint", sample_ckpt, "Model checkpoint")->required();
  sample->add_option("--out", sample_out, "Output directory")->required();
  sample->add_option("--count", sample_count, "Number of samples");
  sample->add_option("--chords", sample_chords, "Conditioning pair, e.g. \"C,G\"");
  add_common(sample, common);

  auto* interp = app.add_subcommand("interp", "Interpolate between two measures");
  std::string interp_a, interp_b, interp_ckpt, interp_out;
  int interp_steps = 8;
  interp->add_option("--a", interp_a, "First .mid file")->required();
  interp->add_option("--b", interp_b, "Second .mid file")->required();
  interp->add_option("--steps", interp_steps, "Interpolation points");
  interp->add_option("--checkpoint", interp_ckpt, "Model checkpoint")->required();
  interp->add_option("--out", interp_out, "Output directory")->required();
  add_common(interp, common);

  auto* attr = app.add_subcommand("attr", "Apply an attribute vector to a measure");
  std::string attr_name, attr_dataset, attr_ckpt, attr_input, attr_out;
  double attr_scale = 1.0;
  attr->add_option("--vector", attr_name,
                   "pitch_range | track_count | note_density | strings_only")
      ->required();
  attr->add_option("--scale", attr_scale, "Attribute scale (default 1)");
  attr->add_option("--dataset", attr_dataset, "Dataset for the with/without split")->required();
  attr->add_option("--checkpoint", attr_ckpt, "Model checkpoint")->required();
  attr->add_option("--input", attr_input, "Measure to translate (.mid)")->required();
  attr->add_option("--out", attr_out, "Output directory")->required();
  add_common(attr, common);

  auto* prog = app.add_subcommand("progression", "Decode one latent over a chord progression");
  std::string prog_z, prog_chords, prog_ckpt, prog_out;
  prog->add_option("--z", prog_z, "JSON latent vector file (default: sample the prior)");
  prog->add_option("--chords", prog_chords, "Comma-separated chords, 2 per measure")
      ->required();
  prog->add_option("--checkpoint", prog_ckpt, "Model checkpoint")->required();
  prog->add_option("--out", prog_out, "Output .mid path")->required();
  add_common(prog, common);

  auto* render = app.add_subcommand("render", "Render measures as a pianoroll");
  std::string render_in, render_out, render_format = "svg";
  bool strip_drums = false, strip_octaves = false;
  render->add_option("--input", render_in, ".mid file or .jsonl dataset")->required();
  render->add_option("--out", render_out, "Output file")->required();
  render->add_flag("--strip-drums", strip_drums, "Drop drum tracks");
  render->add_option("--format", render_format, "svg or text");
  render->add_flag("--strip-octaves", strip_octaves, "Fold pitches to 12 classes");
  add_common(render, common, false);

  auto* stats = app.add_subcommand("stats", "Summarize a dataset");
  std::string stats_dataset;
  stats->add_option("--dataset", stats_dataset, "Dataset JSON lines")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 1;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(common, in_dir, out_path, stats_path);
    if (chords_cmd->parsed()) return cmd_chords(common, chords_in, chords_out);
    if (train->parsed())
      return cmd_train(common, train_dataset, train_out, train_steps, train_resume);
    if (sample->parsed())
      return cmd_sample(common, sample_ckpt, sample_out, sample_count, sample_chords);
    if (interp->parsed())
      return cmd_interp(common, interp_a, interp_b, interp_steps, interp_ckpt, interp_out);
    if (attr->parsed())
      return cmd_attr(common, attr_name, attr_scale, attr_dataset, attr_ckpt, attr_input,
                      attr_out);
    if (prog->parsed())
      return cmd_progression(common, prog_z, prog_chords, prog_ckpt, prog_out);
    if (render->parsed())
      return cmd_render(common, render_in, render_out, strip_drums, strip_octaves,
                        render_format);
    if (stats->parsed()) return cmd_stats(stats_dataset);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
