#include "midispace/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "midispace/errors.hpp"

namespace midispace {

namespace {

long ceil_div(long a, long b) { return (a + b - 1) / b; }

// nearest step with ties up: floor(rel * 24 / tpq + 1/2)
int quantize_step(long rel_ticks, long tpq) {
  return static_cast<int>((rel_ticks * 2 * kStepsPerQuarter + tpq) / (2 * tpq));
}

}  // namespace

long measure_count(const MeterSegment& segment) {
  const long span = segment.end_tick - segment.start_tick;
  if (span <= 0) return 0;
  const long num = static_cast<long>(segment.numerator) * 4 * segment.ticks_per_quarter;
  return ceil_div(span * segment.denominator, num);
}

std::vector<RawMeasure> split_measures(const MeterSegment& segment) {
  if (segment.numerator != 4 || segment.denominator != 4) return {};
  const long tpq = segment.ticks_per_quarter;
  const long measure_ticks = 4 * tpq;
  const long span = segment.end_tick - segment.start_tick;
  const long count = span <= 0 ? 0 : ceil_div(span, measure_ticks);

  std::vector<RawMeasure> measures(count);
  for (const auto& n : segment.notes) {
    const long onset = n.onset_ticks - segment.start_tick;
    long w = onset / measure_ticks;
    long rel = onset - w * measure_ticks;
    int on_step = quantize_step(rel, tpq);
    if (on_step >= kStepsPerMeasure) {
      ++w;
      on_step = 0;
      rel = 0;
    }
    if (w >= count) continue;
    const long rel_off = (n.onset_ticks + n.duration_ticks) - segment.start_tick -
                         w * measure_ticks;
    int off_step = quantize_step(rel_off, tpq);
    off_step = std::min(off_step, kStepsPerMeasure);

    RawNote out;
    out.pitch = n.pitch;
    out.onset_step = on_step;
    out.duration_steps = std::max(1, off_step - on_step);
    out.duration_steps = std::min(out.duration_steps, kStepsPerMeasure - on_step);
    out.velocity = n.velocity;
    out.program = n.program;
    out.is_drum = n.is_drum;
    out.source_track = n.source_track;
    measures[w].push_back(out);
  }
  return measures;
}

ExtractResult extract_tracks(const RawMeasure& raw) {
  // key: (program with drums folded to 128, source track); map order gives
  // program-ascending tracks with same-program ties in source order
  std::map<std::pair<int, int>, std::vector<QuantizedNote>> groups;
  for (const auto& n : raw) {
    const int program = n.is_drum ? kDrumProgram : n.program;
    QuantizedNote q;
    q.pitch = n.pitch;
    q.onset = n.onset_step;
    q.duration = n.duration_steps;
    q.velocity_bin = quantize_velocity(n.velocity);
    groups[{program, n.source_track}].push_back(q);
  }

  ExtractResult res;
  if (groups.size() < 2 || groups.size() > static_cast<std::size_t>(kNumTrackSlots)) {
    res.reason = DiscardReason::TrackCount;
    return res;
  }

  std::vector<TrackContent> contents;
  contents.reserve(groups.size());
  for (auto& [key, notes] : groups) contents.push_back({std::move(notes), key.first});

  res.measure = encode_measure(contents, {0, 0});
  for (const auto& track : res.measure.tracks) {
    if (static_cast<int>(track.size()) > kMaxTrackTokens) {
      res.reason = DiscardReason::EventCount;
      return res;
    }
  }
  return res;
}

namespace {

std::string dedupe_key(const Measure& m) {
  std::string key;
  for (const auto& track : m.tracks) {
    for (Token t : track) {
      key.push_back(static_cast<char>(t >> 8));
      key.push_back(static_cast<char>(t & 0xff));
    }
    key.push_back('\xff');
    key.push_back('\xff');
  }
  return key;
}

}  // namespace

bool Deduper::insert(const Measure& m) {
  std::string key = dedupe_key(m);
  const auto it = std::lower_bound(keys_.begin(), keys_.end(), key);
  if (it != keys_.end() && *it == key) return false;
  keys_.insert(it, std::move(key));
  return true;
}

namespace {

std::uint8_t rotate_chord(std::uint8_t chord, int semitones) {
  if (chord == 0) return 0;
  const int q = (chord - 1) / 12;
  const int root = (chord - 1) % 12;
  return static_cast<std::uint8_t>(1 + q * 12 + ((root + semitones) % 12 + 12) % 12);
}

}  // namespace

Measure transpose_augment(const Measure& m, int semitones) {
  std::vector<TrackContent> contents;
  for (const auto& track : m.tracks) {
    if (is_missing_track(track)) continue;
    TrackDecode d = decode_track(track);
    TrackContent content;
    content.program = d.program;
    if (d.program == kDrumProgram || semitones == 0) {
      content.notes = std::move(d.notes);
    } else {
      for (auto& n : d.notes) {
        const int pitch = n.pitch + semitones;
        if (pitch < 0 || pitch > 127) continue;
        n.pitch = pitch;
        content.notes.push_back(n);
      }
      if (content.notes.empty()) continue;  // whole track transposed out of range
    }
    contents.push_back(std::move(content));
  }
  return encode_measure(
      contents, {rotate_chord(m.chords[0], semitones), rotate_chord(m.chords[1], semitones)});
}

Measure transpose_augment(const Measure& m, Rng& rng) {
  return transpose_augment(m, rng.uniform_int(-3, 3));
}

DatasetStats build_dataset(const std::string& input_dir, const std::string& output_path,
                           const BuildConfig& config) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(input_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".mid" || ext == ".midi") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  DatasetStats stats;
  Deduper deduper;
  std::vector<Measure> retained;

  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    std::vector<MeterSegment> segments;
    try {
      segments = segment_by_meter(parse_smf(bytes));
    } catch (const ParseError&) {
      ++stats.files_skipped;
      continue;
    }

    for (const auto& segment : segments) {
      if (segment.numerator != 4 || segment.denominator != 4) {
        const long n = measure_count(segment);
        stats.measures_seen += n;
        stats.discarded_bad_length += n;
        continue;
      }
      const auto raws = split_measures(segment);
      if (static_cast<int>(raws.size()) > config.chord_params.max_measures) {
        ++stats.segments_discarded_too_long;
        continue;
      }
      if (raws.empty()) continue;

      std::vector<std::vector<QuantizedNote>> harmony_notes(raws.size());
      for (std::size_t i = 0; i < raws.size(); ++i) {
        for (const auto& n : raws[i]) {
          if (n.is_drum) continue;
          harmony_notes[i].push_back(
              {n.pitch, n.onset_step, n.duration_steps, quantize_velocity(n.velocity)});
        }
      }
      const auto harmony = chords::infer_chords(harmony_notes, config.chord_params);

      for (std::size_t i = 0; i < raws.size(); ++i) {
        ++stats.measures_seen;
        ExtractResult res = extract_tracks(raws[i]);
        if (res.reason == DiscardReason::TrackCount) {
          ++stats.discarded_track_count;
          continue;
        }
        if (res.reason == DiscardReason::EventCount) {
          ++stats.discarded_event_count;
          continue;
        }
        res.measure.chords = harmony.measure_chords[i];
        if (!deduper.insert(res.measure)) {
          ++stats.duplicates_removed;
          continue;
        }
        ++stats.retained;
        retained.push_back(std::move(res.measure));
      }
    }
  }

  write_dataset(output_path, retained);
  return stats;
}

}  // namespace midispace
