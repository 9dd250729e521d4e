#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "midispace/events.hpp"

namespace midispace {

/// One note as read from a Standard MIDI File, in absolute ticks.
struct ScoreNote {
  int pitch = 0;          // 0..127
  long onset_ticks = 0;   // absolute, >= 0
  long duration_ticks = 1;
  int velocity = 64;      // 1..127
  int program = 0;        // 0..127 (program in effect at onset)
  bool is_drum = false;   // channel 10
  int source_track = 0;   // MTrk chunk index

  bool operator==(const ScoreNote&) const = default;
};

struct TempoEvent {
  long tick = 0;
  double bpm = 120.0;
};

struct TimeSignatureEvent {
  long tick = 0;
  int numerator = 4;
  int denominator = 4;
};

struct ParsedScore {
  std::vector<ScoreNote> notes;
  std::vector<TempoEvent> tempos;            // sorted by tick
  std::vector<TimeSignatureEvent> meters;    // sorted by tick
  int ticks_per_quarter = 480;
  long end_tick = 0;                          // last event tick over all tracks
  std::vector<std::string> warnings;
};

/// Parses SMF format 0 or 1. Throws ParseError (with byte offset) on
/// malformed input; unmatched note-ons close at end of track with a warning.
ParsedScore parse_smf(const std::vector<std::uint8_t>& bytes);

/// A run of the score with a single tempo and time signature. Notes keep
/// absolute ticks and are clipped so they end inside the segment.
struct MeterSegment {
  std::vector<ScoreNote> notes;
  int ticks_per_quarter = 480;
  int numerator = 4;
  int denominator = 4;
  double tempo_bpm = 120.0;
  long start_tick = 0;
  long end_tick = 0;
};

/// Splits at every effective tempo or time-signature change. Segments
/// partition [0, end_tick]; empty segments are kept (callers discard them).
std::vector<MeterSegment> segment_by_meter(const ParsedScore& score);

/// Emits a format-1 file: a meta track carrying tempo and 4/4 time signature,
/// then one track per non-missing model track laid out measure after measure.
/// Drums go to channel 10; ticks_per_quarter must be a multiple of 24 so the
/// quantized grid maps exactly. Throws DataError on more than 15 non-drum
/// tracks in one measure (channel exhaustion).
std::vector<std::uint8_t> write_smf(const std::vector<Measure>& measures,
                                    double tempo_bpm = 120.0,
                                    int ticks_per_quarter = 480);

}  // namespace midispace
