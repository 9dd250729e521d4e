#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "midispace/model.hpp"
#include "midispace/train.hpp"

namespace midispace {

/// Checkpoint wire format, version 1:
///   u32 little-endian manifest length, JSON manifest, raw tensor data.
/// The manifest carries the step, the full model config and a tensor table
/// (name, rows, cols, byte offset into the data section, in registration
/// order). Tensor data is little-endian float32 regardless of host; values
/// round-trip through a narrowing cast from the double-precision parameters.
/// Optimizer state, when present, appends its moment tensors to the same
/// data section under an "optimizer" manifest entry.

struct CheckpointInfo {
  long step = 0;
  ModelConfig config;
  bool has_optimizer = false;
};

std::vector<std::uint8_t> save_checkpoint(const Model& model, long step,
                                          const AdamState* adam = nullptr);

/// Restores parameters (and moments, when both sides have them) into a model
/// built with the identical config; mismatches throw DataError, malformed
/// bytes throw ParseError. Returns the stored step.
long load_checkpoint(const std::vector<std::uint8_t>& bytes, Model& model,
                     AdamState* adam = nullptr);

/// Manifest-only read, for inspecting a checkpoint before building a model.
CheckpointInfo read_checkpoint_info(const std::vector<std::uint8_t>& bytes);

void save_checkpoint_file(const std::string& path, const Model& model, long step,
                          const AdamState* adam = nullptr);
long load_checkpoint_file(const std::string& path, Model& model, AdamState* adam = nullptr);
CheckpointInfo read_checkpoint_info_file(const std::string& path);

}  // namespace midispace
