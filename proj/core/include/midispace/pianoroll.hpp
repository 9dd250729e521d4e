#pragma once

#include <string>
#include <vector>

#include "midispace/events.hpp"

namespace midispace {

enum class RenderFormat { Svg, Text };

struct RenderOptions {
  RenderFormat format = RenderFormat::Svg;
  bool strip_drums = false;
  bool strip_octaves = false;  // fold pitches to 12 pitch-class rows
};

/// "svg" or "text"; anything else throws ConfigError.
RenderFormat parse_render_format(const std::string& name);

/// General MIDI 16-program blocks, drums (program 128) as family 16.
int instrument_family(int program);

/// Renders measures side by side onto one pitch-by-step grid. The text
/// format marks a note's onset cell with its family digit and continuation
/// cells with '-'; empty cells are '.'. Overlapping notes share cells and
/// the later-decoded track wins, so round-tripping is exact only for
/// measures without per-pitch overlap. Output bytes are deterministic.
std::string render_measures(const std::vector<Measure>& measures, const RenderOptions& options);

struct RenderedNote {
  int pitch = 0;  // pitch class when the grid has 12 rows
  int onset = 0;
  int duration = 1;
  int family = 0;

  bool operator==(const RenderedNote&) const = default;
};

/// Inverse of the text format; rows scan top to bottom.
std::vector<RenderedNote> parse_text_grid(const std::string& text);

}  // namespace midispace
