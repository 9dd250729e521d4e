#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "midispace/chords.hpp"
#include "midispace/events.hpp"
#include "midispace/rng.hpp"
#include "midispace/smf.hpp"

namespace midispace {

/// Pipeline accounting. The conservation identity
///   retained = measures_seen - discards - duplicates_removed
/// holds over the first six fields; the trailing counters sit outside it
/// (their units are segments and files, not measures).
struct DatasetStats {
  long measures_seen = 0;
  long discarded_bad_length = 0;
  long discarded_track_count = 0;
  long discarded_event_count = 0;
  long duplicates_removed = 0;
  long retained = 0;
  long segments_discarded_too_long = 0;
  long files_skipped = 0;

  bool operator==(const DatasetStats&) const = default;
};

/// One note quantized onto a measure's 96-step grid, still carrying its
/// source identity for track grouping.
struct RawNote {
  int pitch = 0;
  int onset_step = 0;
  int duration_steps = 1;
  int velocity = 64;  // raw 1..127
  int program = 0;
  bool is_drum = false;
  int source_track = 0;
};

using RawMeasure = std::vector<RawNote>;

/// Measure count of a segment under its own meter (used for discard stats).
long measure_count(const MeterSegment& segment);

/// Partitions a 4/4 segment into 96-step measures, quantizing onsets and
/// offsets to the nearest step (ties round up) and clipping notes at measure
/// boundaries. Non-4/4 segments yield no measures.
std::vector<RawMeasure> split_measures(const MeterSegment& segment);

enum class DiscardReason { None, TrackCount, EventCount };

struct ExtractResult {
  Measure measure;  // chords left {0, 0}; attach inferred chords afterwards
  DiscardReason reason = DiscardReason::None;
};

/// Groups notes by (source_track, program, is_drum) and encodes the tracks.
ExtractResult extract_tracks(const RawMeasure& raw);

/// Byte-level dedupe over the 8-slot token serialization, chords excluded.
class Deduper {
 public:
  bool insert(const Measure& m);  // true when first seen

 private:
  std::vector<std::string> keys_;  // sorted
};

/// Shifts non-drum pitches by `semitones`, dropping notes that leave the
/// MIDI range, and rotates the chord annotations' roots. Drums unchanged.
Measure transpose_augment(const Measure& m, int semitones);
Measure transpose_augment(const Measure& m, Rng& rng);  // draws from -3..+3

struct BuildConfig {
  chords::ChordInferenceParams chord_params;
  std::uint64_t seed = 0;  // recorded for provenance; the pipeline is deterministic
};

/// Full ingest: .mid files (sorted) -> JSON-lines dataset at output_path.
DatasetStats build_dataset(const std::string& input_dir, const std::string& output_path,
                           const BuildConfig& config = {});

// dataset serialization (JSON lines, {"tracks": [...], "chords": [a, b]})
std::string measure_to_json(const Measure& m);
Measure measure_from_json(const std::string& line);
void write_dataset(const std::string& path, const std::vector<Measure>& measures);
std::vector<Measure> read_dataset(const std::string& path);

std::string stats_to_json(const DatasetStats& stats);

}  // namespace midispace
