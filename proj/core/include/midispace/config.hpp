#pragma once

#include <cstdint>
#include <string>

#include "midispace/chords.hpp"
#include "midispace/model.hpp"
#include "midispace/train.hpp"

namespace midispace {

/// One JSON document configuring the whole pipeline. Every field has a
/// default; unknown keys are rejected so typos fail loudly. The single
/// top-level seed feeds the model and trainer (their embedded seed fields
/// are populated from it, not read from the file).
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  chords::ChordInferenceParams chords;

  std::string input_dir;
  std::string dataset_path;
  std::string checkpoint_path;
  std::string output_dir;

  std::uint64_t seed = 0;
  double temperature = 0.2;
  double attr_scale = 1.0;
  bool attr_threshold_set = false;  // absent -> split at the corpus median
  double attr_threshold = 0.0;

  bool operator==(const RunConfig&) const = default;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Effective config, suitable for echoing into output directories;
/// parse_run_config(run_config_to_json(c)) == c.
std::string run_config_to_json(const RunConfig& config);

}  // namespace midispace
