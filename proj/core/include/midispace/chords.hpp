#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "midispace/events.hpp"

namespace midispace::chords {

/// Full harmony chord vocabulary: index 0 is no-chord, then eight quality
/// blocks of twelve roots each. The first 49 indices coincide with the
/// conditioning vocabulary (no-chord + the four triad qualities).
inline constexpr int kNumQualities = 8;
inline constexpr int kNumFullChords = 1 + kNumQualities * 12;  // 97
inline constexpr int kNumKeys = 12;
inline constexpr int kNumStates = kNumKeys * kNumFullChords;  // 1164

enum class Quality : std::uint8_t {
  Major = 0,
  Minor,
  Augmented,
  Diminished,
  Dominant7,
  Major7,
  Minor7,
  HalfDiminished,
};

struct ChordInferenceParams {
  double gamma = 0.5;    // chord-change probability
  double rho = 0.001;    // key-change probability
  double psi = 0.01;     // out-of-key chord-tone probability
  double kappa = 100.0;  // observation concentration
  int max_measures = 500;
  int frames_per_measure = 2;

  bool operator==(const ChordInferenceParams&) const = default;
};

/// key in 0..11 (major tonic pitch class), chord in 0..96.
struct HarmonyState {
  int key = 0;
  int chord = 0;
};

inline int state_index(int key, int chord) { return key * kNumFullChords + chord; }
inline HarmonyState state_of(int index) {
  return {index / kNumFullChords, index % kNumFullChords};
}

inline int chord_index(Quality q, int root) {
  return 1 + static_cast<int>(q) * 12 + root;
}

/// Pitch classes of a chord, empty for no-chord.
std::vector<int> chord_tones(int chord);

/// Unit-L2 template over the chord tones; no-chord is uniform 1/sqrt(12).
std::array<double, 12> chord_template(int chord);

/// Binomial membership probability f(h); no-chord gives 1.
double key_membership_prob(int key, int chord, double psi);

/// Natural-log transition probability between harmony states.
double transition_logprob(const HarmonyState& prev, const HarmonyState& next,
                          const ChordInferenceParams& params);

/// Natural-log initial probability: uniform over keys, f-proportional over chords.
double initial_logprob(const HarmonyState& state, const ChordInferenceParams& params);

using PitchClassFrame = std::array<double, 12>;

/// kappa * (y . c(chord)), used directly as the log observation score.
double observation_logscore(const PitchClassFrame& frame, int chord,
                            const ChordInferenceParams& params);

/// Two duration-weighted, L2-normalized frames per measure; drums excluded.
std::array<PitchClassFrame, 2> pitch_class_frames(const std::vector<QuantizedNote>& notes);

/// Max-probability state path. `subset` restricts the allowed state indices
/// (ascending, non-empty); empty means all 1164 states. Ties resolve to the
/// lowest state index, latest step first.
std::vector<HarmonyState> viterbi(const std::vector<PitchClassFrame>& frames,
                                  const ChordInferenceParams& params,
                                  const std::vector<int>& subset = {});

/// 97-class chord down to the 49-class conditioning vocabulary.
std::uint8_t project_to_triads(int chord);

struct InferredHarmony {
  std::vector<std::array<std::uint8_t, 2>> measure_chords;  // 49-class
  std::vector<std::array<HarmonyState, 2>> diagnostics;     // full states
};

/// End-to-end inference over one segment's measures (notes per measure, drums
/// already excluded or flagged via pitch >= 0 with drum notes removed by the
/// caller). Throws DataError when the segment exceeds max_measures.
InferredHarmony infer_chords(const std::vector<std::vector<QuantizedNote>>& measures,
                             const ChordInferenceParams& params = {});

/// "C", "Cm", "C+", "Co", "N.C." for the conditioning vocabulary.
std::string chord_name(std::uint8_t chord_class);

/// Diagnostic names for the full vocabulary ("C7", "CM7", "Cm7", "Cm7b5", ...).
std::string full_chord_name(int chord);

/// Parses a conditioning-vocabulary name; accepts flat aliases ("Db" = "C#").
std::optional<std::uint8_t> parse_chord_name(const std::string& name);

}  // namespace midispace::chords
