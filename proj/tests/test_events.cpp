#include <doctest.h>

#include <algorithm>

#include "midispace/errors.hpp"
#include "midispace/events.hpp"
#include "support/generators.hpp"

using namespace midispace;

TEST_CASE("token layout covers the vocabulary exactly once") {
  CHECK(note_on(0) == 0);
  CHECK(note_on(127) == 127);
  CHECK(note_off(0) == 128);
  CHECK(note_off(127) == 255);
  CHECK(velocity_change(0) == 256);
  CHECK(velocity_change(7) == 263);
  CHECK(time_shift(1) == 264);
  CHECK(time_shift(96) == 359);
  CHECK(program_select(0) == 360);
  CHECK(program_select(kDrumProgram) == 488);
  CHECK(kTokenEndTrack == 489);
  CHECK(kVocabSize == 490);

  for (Token t = 0; t < kVocabSize; ++t) {
    const Event e = event_from_token(t);
    CHECK(token_from_event(e) == t);
  }
}

TEST_CASE("event_from_token rejects out-of-range tokens") {
  CHECK_THROWS_AS(event_from_token(static_cast<Token>(kVocabSize)), DataError);
  CHECK_THROWS_AS(token_from_event({EventKind::NoteOn, 128}), DataError);
  CHECK_THROWS_AS(token_from_event({EventKind::TimeShift, 0}), DataError);
  CHECK_THROWS_AS(token_from_event({EventKind::TimeShift, 97}), DataError);
  CHECK_THROWS_AS(token_from_event({EventKind::ProgramSelect, 129}), DataError);
}

TEST_CASE("velocity quantization maps 1..127 onto 8 bins with fixed centers") {
  CHECK(quantize_velocity(1) == 0);
  CHECK(quantize_velocity(15) == 0);
  CHECK(quantize_velocity(16) == 1);
  CHECK(quantize_velocity(64) == 4);
  CHECK(quantize_velocity(112) == 7);
  CHECK(quantize_velocity(127) == 7);
  CHECK_THROWS_AS(quantize_velocity(0), DataError);
  CHECK_THROWS_AS(quantize_velocity(128), DataError);
  for (int bin = 0; bin < 8; ++bin) {
    CHECK(dequantize_velocity(bin) == 16 * bin + 8);
    CHECK(quantize_velocity(dequantize_velocity(bin)) == bin);
  }
}

TEST_CASE("empty track encodes as the single end-track token") {
  const TokenSeq t = encode_track({}, 5);
  CHECK(t == missing_track());
  CHECK(is_missing_track(t));
}

TEST_CASE("single note track has the canonical shape") {
  // program, velocity, on, shift, off, pad shift, end
  const TokenSeq t = encode_track({{60, 0, 24, 3}}, 7);
  const TokenSeq want = {program_select(7), velocity_change(3), note_on(60), time_shift(24),
                         note_off(60),      time_shift(72),     kTokenEndTrack};
  CHECK(t == want);
  CHECK(time_shift_sum(t) == kStepsPerMeasure);
}

TEST_CASE("velocity changes appear only when the bin changes") {
  const TokenSeq t = encode_track({{60, 0, 12, 4}, {62, 12, 12, 4}, {64, 24, 12, 6}}, 0);
  const int vc_count = static_cast<int>(
      std::count_if(t.begin(), t.end(), [](Token tok) {
        return tok >= kTokenVelocityBase && tok < kTokenTimeShiftBase;
      }));
  CHECK(vc_count == 2);  // bin 4 once, bin 6 once
}

TEST_CASE("gaps are covered before the events at a step") {
  const TokenSeq t = encode_track({{60, 95, 1, 4}}, 0);
  const TokenSeq want = {program_select(0), time_shift(95), velocity_change(4),
                         note_on(60),       time_shift(1),  note_off(60),
                         kTokenEndTrack};
  CHECK(t == want);
}

TEST_CASE("same-step note-offs precede velocity and note-ons, pitches ascending") {
  const TokenSeq t = encode_track({{64, 0, 48, 4}, {60, 0, 48, 4}, {62, 48, 48, 4}}, 0);
  // at step 48: off 60, off 64 (ascending), then on 62
  const auto it48 = std::find(t.begin(), t.end(), note_off(60));
  REQUIRE(it48 != t.end());
  CHECK(*(it48 + 1) == note_off(64));
  CHECK(*(it48 + 2) == note_on(62));
}

TEST_CASE("decode inverts encode for random canonical measures") {
  Rng rng(0xE1);
  for (int trial = 0; trial < 500; ++trial) {
    auto notes = testing::random_track_notes(rng);
    const int program = rng.uniform_int(0, kDrumProgram);
    const TokenSeq t = encode_track(notes, program);
    REQUIRE(static_cast<int>(t.size()) <= kMaxTrackTokens);
    const TrackDecode d = decode_track(t);
    CHECK(d.program == program);
    CHECK(d.warnings.empty());
    std::sort(notes.begin(), notes.end(), [](const auto& a, const auto& b) {
      return std::tie(a.onset, a.pitch, a.duration, a.velocity_bin) <
             std::tie(b.onset, b.pitch, b.duration, b.velocity_bin);
    });
    CHECK(d.notes == notes);
  }
}

TEST_CASE("decode tolerates model-style garbage with warnings") {
  SUBCASE("unmatched note-off") {
    const TrackDecode d = decode_track({program_select(0), note_off(60), kTokenEndTrack});
    CHECK(d.notes.empty());
    CHECK(!d.warnings.empty());
  }
  SUBCASE("open note closes at measure end") {
    const TrackDecode d = decode_track({program_select(0), note_on(60), kTokenEndTrack});
    REQUIRE(d.notes.size() == 1);
    CHECK(d.notes[0].duration == kStepsPerMeasure);
    CHECK(d.notes[0].velocity_bin == 4);  // default bin when no velocity seen
  }
  SUBCASE("events at or past step 96 are dropped") {
    const TrackDecode d = decode_track(
        {program_select(0), time_shift(96), time_shift(50), note_on(60), kTokenEndTrack});
    CHECK(d.notes.empty());
    CHECK(d.warnings.size() >= 2);  // clamped shift plus dropped note-on
  }
  SUBCASE("tokens after end-track are ignored") {
    const TrackDecode d =
        decode_track({program_select(0), kTokenEndTrack, note_on(60), kTokenEndTrack});
    CHECK(d.notes.empty());
    CHECK(!d.warnings.empty());
  }
}

TEST_CASE("encode_measure sorts by program with drums last") {
  std::vector<TrackContent> contents;
  contents.push_back({{{60, 0, 10, 4}}, kDrumProgram});
  contents.push_back({{{61, 0, 10, 4}}, 70});
  contents.push_back({{{62, 0, 10, 4}}, 5});
  const Measure m = encode_measure(contents, {0, 0});
  CHECK(decode_track(m.tracks[0]).program == 5);
  CHECK(decode_track(m.tracks[1]).program == 70);
  CHECK(decode_track(m.tracks[2]).program == kDrumProgram);
  for (int k = 3; k < kNumTrackSlots; ++k) CHECK(is_missing_track(m.tracks[k]));
  CHECK(validate_measure(m, MeasureCheck::Dataset).empty());
}

TEST_CASE("encode_measure rejects more than 8 tracks and bad chords") {
  std::vector<TrackContent> many(9, TrackContent{{{60, 0, 10, 4}}, 0});
  CHECK_THROWS_AS(encode_measure(many, {0, 0}), DataError);
  CHECK_THROWS_AS(encode_measure({}, {49, 0}), DataError);
}

TEST_CASE("measure round trip over random measures") {
  Rng rng(0xE2);
  for (int trial = 0; trial < 200; ++trial) {
    const Measure m = testing::random_measure(rng);
    REQUIRE(validate_measure(m, MeasureCheck::Dataset).empty());
    const auto contents = decode_measure(m);
    const Measure again = encode_measure(contents, m.chords);
    CHECK(again == m);
  }
}

TEST_CASE("dataset validation catches structural damage") {
  Rng rng(0xE3);
  Measure m = testing::random_measure(rng);
  SUBCASE("truncated track") {
    m.tracks[0].pop_back();
    CHECK(!validate_measure(m, MeasureCheck::Dataset).empty());
  }
  SUBCASE("interior end-track") {
    m.tracks[0].insert(m.tracks[0].begin() + 1, kTokenEndTrack);
    CHECK(!validate_measure(m, MeasureCheck::Dataset).empty());
  }
  SUBCASE("chord out of range") {
    m.chords[1] = kNumChordClasses;
    CHECK(!validate_measure(m, MeasureCheck::Dataset).empty());
  }
  SUBCASE("present track after missing slot") {
    m.tracks[7] = m.tracks[0];
    CHECK(!validate_measure(m, MeasureCheck::Dataset).empty());
  }
}

TEST_CASE("decoded-level validation is structural only") {
  // a sampled track need not start with program-select or sum to 96
  Measure m;
  for (auto& t : m.tracks) t = missing_track();
  m.tracks[0] = {note_on(60), time_shift(96), time_shift(96), kTokenEndTrack};
  CHECK(validate_measure(m, MeasureCheck::Decoded).empty());
  CHECK(!validate_measure(m, MeasureCheck::Dataset).empty());
}
