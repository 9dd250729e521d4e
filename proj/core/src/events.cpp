#include "midispace/events.hpp"

#include <algorithm>
#include <map>

#include "midispace/errors.hpp"

namespace midispace {

Token token_from_event(const Event& e) {
  switch (e.kind) {
    case EventKind::NoteOn:
      if (e.value < 0 || e.value > 127) throw DataError("note-on pitch out of range");
      return note_on(e.value);
    case EventKind::NoteOff:
      if (e.value < 0 || e.value > 127) throw DataError("note-off pitch out of range");
      return note_off(e.value);
    case EventKind::VelocityChange:
      if (e.value < 0 || e.value > 7) throw DataError("velocity bin out of range");
      return velocity_change(e.value);
    case EventKind::TimeShift:
      if (e.value < 1 || e.value > 96) throw DataError("time-shift steps out of range");
      return time_shift(e.value);
    case EventKind::ProgramSelect:
      if (e.value < 0 || e.value > kDrumProgram) throw DataError("program out of range");
      return program_select(e.value);
    case EventKind::EndTrack:
      return kTokenEndTrack;
  }
  throw DataError("unknown event kind");
}

Event event_from_token(Token t) {
  if (t < kTokenNoteOffBase) return {EventKind::NoteOn, t};
  if (t < kTokenVelocityBase) return {EventKind::NoteOff, t - kTokenNoteOffBase};
  if (t < kTokenTimeShiftBase) return {EventKind::VelocityChange, t - kTokenVelocityBase};
  if (t < kTokenProgramBase) return {EventKind::TimeShift, t - kTokenTimeShiftBase + 1};
  if (t < kTokenEndTrack) return {EventKind::ProgramSelect, t - kTokenProgramBase};
  if (t == kTokenEndTrack) return {EventKind::EndTrack, 0};
  throw DataError("token index " + std::to_string(t) + " outside vocabulary");
}

bool is_missing_track(const TokenSeq& tokens) {
  return tokens.size() == 1 && tokens[0] == kTokenEndTrack;
}

int quantize_velocity(int velocity) {
  if (velocity < 1 || velocity > 127)
    throw DataError("velocity " + std::to_string(velocity) + " out of range 1..127");
  return std::min(7, velocity / 16);
}

int dequantize_velocity(int bin) {
  if (bin < 0 || bin > 7) throw DataError("velocity bin out of range");
  return 16 * bin + 8;
}

namespace {

void emit_time_shifts(TokenSeq& out, int gap) {
  while (gap > 0) {
    const int step = std::min(gap, 96);
    out.push_back(time_shift(step));
    gap -= step;
  }
}

}  // namespace

TokenSeq encode_track(const std::vector<QuantizedNote>& notes, int program) {
  if (notes.empty()) return missing_track();
  if (program < 0 || program > kDrumProgram) throw DataError("program out of range");

  // step -> notes starting / ending there
  std::map<int, std::vector<const QuantizedNote*>> ons, offs;
  for (const auto& n : notes) {
    if (n.pitch < 0 || n.pitch > 127) throw DataError("pitch out of range");
    if (n.velocity_bin < 0 || n.velocity_bin > 7) throw DataError("velocity bin out of range");
    if (n.onset < 0 || n.onset >= kStepsPerMeasure || n.duration < 1)
      throw DataError("note onset/duration outside the measure grid");
    if (n.onset + n.duration > kStepsPerMeasure)
      throw DataError("note extends past step 96; clip before encoding");
    ons[n.onset].push_back(&n);
    offs[n.onset + n.duration].push_back(&n);
  }

  TokenSeq out;
  out.push_back(program_select(program));
  int now = 0;
  int velocity_state = -1;  // undefined until the first velocity-change

  std::vector<int> steps;
  for (const auto& [s, _] : ons) steps.push_back(s);
  for (const auto& [s, _] : offs) steps.push_back(s);
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());

  for (int s : steps) {
    emit_time_shifts(out, s - now);
    now = s;
    if (auto it = offs.find(s); it != offs.end()) {
      auto ending = it->second;
      std::sort(ending.begin(), ending.end(),
                [](const QuantizedNote* a, const QuantizedNote* b) { return a->pitch < b->pitch; });
      for (const auto* n : ending) out.push_back(note_off(n->pitch));
    }
    if (auto it = ons.find(s); it != ons.end()) {
      auto starting = it->second;
      std::sort(starting.begin(), starting.end(),
                [](const QuantizedNote* a, const QuantizedNote* b) { return a->pitch < b->pitch; });
      for (const auto* n : starting) {
        if (n->velocity_bin != velocity_state) {
          out.push_back(velocity_change(n->velocity_bin));
          velocity_state = n->velocity_bin;
        }
        out.push_back(note_on(n->pitch));
      }
    }
  }
  emit_time_shifts(out, kStepsPerMeasure - now);
  out.push_back(kTokenEndTrack);
  return out;
}

TrackDecode decode_track(const TokenSeq& tokens) {
  TrackDecode result;
  struct Open {
    int pitch;
    int onset;
    int bin;
  };
  std::vector<Open> open;
  int now = 0;
  int velocity_state = -1;
  bool have_program = false;
  bool ended = false;

  auto close = [&](std::size_t idx, int at) {
    const Open n = open[idx];
    open.erase(open.begin() + static_cast<std::ptrdiff_t>(idx));
    result.notes.push_back({n.pitch, n.onset, std::max(1, at - n.onset), n.bin});
  };

  for (std::size_t i = 0; i < tokens.size() && !ended; ++i) {
    const Event e = event_from_token(tokens[i]);
    switch (e.kind) {
      case EventKind::TimeShift:
        if (now + e.value > kStepsPerMeasure) {
          result.warnings.push_back("time-shift past step 96 clamped");
          now = kStepsPerMeasure;
        } else {
          now += e.value;
        }
        break;
      case EventKind::NoteOn: {
        if (now >= kStepsPerMeasure) {
          result.warnings.push_back("note-on at or after step 96 ignored");
          break;
        }
        int bin = velocity_state;
        if (bin < 0) {
          result.warnings.push_back("note-on before any velocity-change; using bin 4");
          bin = 4;
        }
        open.push_back({e.value, now, bin});
        break;
      }
      case EventKind::NoteOff: {
        // close the earliest open note of this pitch
        bool found = false;
        for (std::size_t j = 0; j < open.size(); ++j) {
          if (open[j].pitch == e.value) {
            close(j, now);
            found = true;
            break;
          }
        }
        if (!found) result.warnings.push_back("note-off with no open note ignored");
        break;
      }
      case EventKind::VelocityChange:
        velocity_state = e.value;
        break;
      case EventKind::ProgramSelect:
        if (have_program) {
          result.warnings.push_back("repeated program-select ignored");
        } else {
          result.program = e.value;
          have_program = true;
        }
        break;
      case EventKind::EndTrack:
        ended = true;
        if (i + 1 < tokens.size())
          result.warnings.push_back("tokens after end-track ignored");
        break;
    }
  }
  if (!ended && !tokens.empty())
    result.warnings.push_back("sequence missing end-track; closing at step 96");
  while (!open.empty()) close(0, kStepsPerMeasure);

  std::sort(result.notes.begin(), result.notes.end(),
            [](const QuantizedNote& a, const QuantizedNote& b) {
              return std::tie(a.onset, a.pitch, a.duration, a.velocity_bin) <
                     std::tie(b.onset, b.pitch, b.duration, b.velocity_bin);
            });
  return result;
}

Measure encode_measure(const std::vector<TrackContent>& tracks,
                       const std::array<std::uint8_t, 2>& chords) {
  if (tracks.size() > kNumTrackSlots)
    throw DataError("measure has " + std::to_string(tracks.size()) + " tracks, limit is 8");
  for (auto c : chords)
    if (c >= kNumChordClasses) throw DataError("chord class out of range");

  std::vector<std::size_t> order(tracks.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return tracks[a].program < tracks[b].program;  // drums (128) sort last
  });

  Measure m;
  m.chords = chords;
  std::size_t slot = 0;
  for (std::size_t i : order) m.tracks[slot++] = encode_track(tracks[i].notes, tracks[i].program);
  for (; slot < kNumTrackSlots; ++slot) m.tracks[slot] = missing_track();
  return m;
}

std::vector<TrackContent> decode_measure(const Measure& measure) {
  std::vector<TrackContent> out;
  for (const auto& t : measure.tracks) {
    if (is_missing_track(t)) continue;
    TrackDecode d = decode_track(t);
    out.push_back({std::move(d.notes), d.program});
  }
  return out;
}

int time_shift_sum(const TokenSeq& tokens) {
  int total = 0;
  for (Token t : tokens) {
    if (t >= kTokenTimeShiftBase && t < kTokenProgramBase)
      total += t - kTokenTimeShiftBase + 1;
    if (t == kTokenEndTrack) break;
  }
  return total;
}

std::vector<std::string> validate_measure(const Measure& m, MeasureCheck level,
                                          int max_track_len) {
  std::vector<std::string> issues;
  auto complain = [&](std::size_t slot, const std::string& what) {
    issues.push_back("track " + std::to_string(slot) + ": " + what);
  };

  for (auto c : m.chords)
    if (c >= kNumChordClasses) issues.push_back("chord class out of range");

  int prev_program = -1;
  for (std::size_t slot = 0; slot < kNumTrackSlots; ++slot) {
    const TokenSeq& t = m.tracks[slot];
    if (t.empty()) {
      complain(slot, "empty token sequence");
      continue;
    }
    if (static_cast<int>(t.size()) > max_track_len)
      complain(slot, "more than " + std::to_string(max_track_len) + " tokens");
    for (Token tok : t)
      if (tok >= kVocabSize) {
        complain(slot, "token outside vocabulary");
        break;
      }
    if (t.back() != kTokenEndTrack) complain(slot, "does not end with end-track");
    for (std::size_t i = 0; i + 1 < t.size(); ++i)
      if (t[i] == kTokenEndTrack) {
        complain(slot, "end-track before the final position");
        break;
      }
    if (is_missing_track(t)) continue;

    if (level == MeasureCheck::Dataset) {
      const Event first = event_from_token(t.front());
      if (first.kind != EventKind::ProgramSelect) {
        complain(slot, "does not begin with program-select");
      } else {
        if (first.value < prev_program)
          complain(slot, "tracks not sorted by program");
        prev_program = first.value;
      }
      if (time_shift_sum(t) != kStepsPerMeasure)
        complain(slot, "time-shift sum is not 96");
    }
  }
  if (level == MeasureCheck::Dataset) {
    // missing slots must come after all present ones
    bool seen_missing = false;
    for (std::size_t slot = 0; slot < kNumTrackSlots; ++slot) {
      if (is_missing_track(m.tracks[slot])) {
        seen_missing = true;
      } else if (seen_missing) {
        complain(slot, "present track after a missing slot");
        break;
      }
    }
  }
  return issues;
}

}  // namespace midispace
