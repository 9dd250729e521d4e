#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace midispace {

// Token vocabulary layout. The index ranges are load-bearing: datasets,
// checkpoints and the model's softmax all agree on this order.
//   [0,128)    note-on, per MIDI pitch
//   [128,256)  note-off, per MIDI pitch
//   [256,264)  velocity-change, 8 bins
//   [264,360)  time-shift of 1..96 steps (24 steps per quarter note)
//   [360,489)  program-select, programs 0..127 plus 128 for drums
//   489        end-track
using Token = std::uint16_t;

inline constexpr int kVocabSize = 490;
inline constexpr int kStepsPerQuarter = 24;
inline constexpr int kStepsPerMeasure = 96;
inline constexpr int kNumTrackSlots = 8;
inline constexpr int kMaxTrackTokens = 64;
inline constexpr int kDrumProgram = 128;
inline constexpr int kNumChordClasses = 49;

inline constexpr Token kTokenNoteOnBase = 0;
inline constexpr Token kTokenNoteOffBase = 128;
inline constexpr Token kTokenVelocityBase = 256;
inline constexpr Token kTokenTimeShiftBase = 264;
inline constexpr Token kTokenProgramBase = 360;
inline constexpr Token kTokenEndTrack = 489;

enum class EventKind : std::uint8_t {
  NoteOn,
  NoteOff,
  VelocityChange,
  TimeShift,
  ProgramSelect,
  EndTrack,
};

/// One vocabulary entry in structured form. `value` holds the pitch, bin,
/// step count or program depending on the kind; 0 for end-track.
struct Event {
  EventKind kind;
  int value = 0;

  bool operator==(const Event&) const = default;
};

Token token_from_event(const Event& e);
Event event_from_token(Token t);

inline Token note_on(int pitch) { return static_cast<Token>(kTokenNoteOnBase + pitch); }
inline Token note_off(int pitch) { return static_cast<Token>(kTokenNoteOffBase + pitch); }
inline Token velocity_change(int bin) { return static_cast<Token>(kTokenVelocityBase + bin); }
inline Token time_shift(int steps) { return static_cast<Token>(kTokenTimeShiftBase + steps - 1); }
inline Token program_select(int program) { return static_cast<Token>(kTokenProgramBase + program); }

using TokenSeq = std::vector<Token>;

/// A note on the 96-step measure grid. Velocity is stored as its bin.
struct QuantizedNote {
  int pitch = 0;      // 0..127
  int onset = 0;      // step, 0..95
  int duration = 1;   // steps, >= 1, onset + duration <= 96
  int velocity_bin = 4;

  bool operator==(const QuantizedNote&) const = default;
};

/// Eight track slots plus the two half-measure chord labels (49-class
/// indices, see chords.hpp). Missing slots hold the single end-track token.
struct Measure {
  std::array<TokenSeq, kNumTrackSlots> tracks;
  std::array<std::uint8_t, 2> chords = {0, 0};

  bool operator==(const Measure&) const = default;
};

inline TokenSeq missing_track() { return TokenSeq{kTokenEndTrack}; }
bool is_missing_track(const TokenSeq& tokens);

int quantize_velocity(int velocity);    // 1..127 -> bin 0..7
int dequantize_velocity(int bin);       // bin -> center 16*bin + 8

/// Encodes notes into the canonical token sequence for one track:
/// program-select first, then a walk of the 96 steps emitting note-offs
/// (ascending pitch), a velocity-change before any note-on whose bin differs
/// from the running velocity state, then note-ons (ascending pitch). Gaps are
/// covered by the fewest time-shifts, largest first, padded out to step 96.
/// An empty note list yields the missing-track sequence.
TokenSeq encode_track(const std::vector<QuantizedNote>& notes, int program);

struct TrackDecode {
  std::vector<QuantizedNote> notes;  // sorted by (onset, pitch, duration, bin)
  int program = 0;
  std::vector<std::string> warnings;
};

/// Replays a token sequence. Tolerant of model output: unmatched note-offs,
/// missing velocity state (defaults to bin 4), events past step 96 and tokens
/// after end-track are skipped with a warning; open notes close at step 96.
TrackDecode decode_track(const TokenSeq& tokens);

struct TrackContent {
  std::vector<QuantizedNote> notes;
  int program = 0;  // 0..127, or 128 for drums
};

/// Sorts tracks by program (drums last, ties by input order), encodes each
/// and pads to 8 slots. Throws DataError on more than 8 tracks.
Measure encode_measure(const std::vector<TrackContent>& tracks,
                       const std::array<std::uint8_t, 2>& chords);

std::vector<TrackContent> decode_measure(const Measure& measure);

enum class MeasureCheck {
  Dataset,  // canonical: program order, time-shift sum exactly 96, <= 64 tokens
  Decoded,  // structural only: what sampling guarantees
};

/// Returns human-readable violations; empty means valid.
std::vector<std::string> validate_measure(const Measure& m, MeasureCheck level,
                                          int max_track_len = kMaxTrackTokens);

/// Total time covered by the sequence's time-shift tokens, in steps.
int time_shift_sum(const TokenSeq& tokens);

}  // namespace midispace
