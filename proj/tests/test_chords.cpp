#include <doctest.h>

#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "midispace/chords.hpp"
#include "midispace/errors.hpp"
#include "midispace/rng.hpp"

#include "support/viterbi_oracle.hpp"

using namespace midispace;
using namespace midispace::chords;

namespace {

// Independent re-derivation of the membership model, kept deliberately
// different in shape from the library (set lookups, iterative binomial).
double oracle_f(int key, int chord, double psi) {
  if (chord == 0) return 1.0;
  static const int kIntervals[8][4] = {{0, 4, 7, -1}, {0, 3, 7, -1}, {0, 4, 8, -1},
                                       {0, 3, 6, -1}, {0, 4, 7, 10}, {0, 4, 7, 11},
                                       {0, 3, 7, 10}, {0, 3, 6, 10}};
  const std::set<int> scale = {0, 2, 4, 5, 7, 9, 11};
  const int q = (chord - 1) / 12;
  const int root = (chord - 1) % 12;
  int n = 0, k = 0;
  for (int iv : kIntervals[q]) {
    if (iv < 0) break;
    ++n;
    const int pc_rel = (((root + iv) % 12) - key % 12 + 12) % 12;
    if (!scale.count(pc_rel)) ++k;
  }
  double binom = 1.0;
  for (int i = 0; i < k; ++i) binom = binom * (n - i) / (i + 1);
  return binom * std::pow(psi, k) * std::pow(1.0 - psi, n - k);
}

double oracle_zf(int key, double psi) {
  double z = 0.0;
  for (int c = 0; c < kNumFullChords; ++c) z += oracle_f(key, c, psi);
  return z;
}

}  // namespace

TEST_CASE("membership probabilities match the binomial model") {
  const double psi = 0.01;
  CHECK(key_membership_prob(0, 0, psi) == 1.0);
  // all-in-key triad, all-in-key seventh, two-out triad
  CHECK(key_membership_prob(0, chord_index(Quality::Major, 0), psi) ==
        doctest::Approx(0.970299).epsilon(1e-12));
  CHECK(key_membership_prob(0, chord_index(Quality::Dominant7, 7), psi) ==
        doctest::Approx(0.96059601).epsilon(1e-12));
  CHECK(key_membership_prob(0, chord_index(Quality::Major, 1), psi) ==
        doctest::Approx(0.000297).epsilon(1e-12));

  for (int key = 0; key < 12; ++key)
    for (int chord = 0; chord < kNumFullChords; ++chord)
      CHECK(key_membership_prob(key, chord, psi) ==
            doctest::Approx(oracle_f(key, chord, psi)).epsilon(1e-12));
}

TEST_CASE("membership normalizer has the frozen value") {
  // independently computed from the binomial model with psi = 0.01
  CHECK(oracle_zf(0, 0.01) == doctest::Approx(15.77921008).epsilon(1e-10));
  for (int key = 0; key < 12; ++key)
    CHECK(oracle_zf(key, 0.01) == doctest::Approx(oracle_zf(0, 0.01)).epsilon(1e-12));
}

TEST_CASE("transition spot values") {
  const ChordInferenceParams p;
  const HarmonyState c_major{0, chord_index(Quality::Major, 0)};
  const HarmonyState g_seven{0, chord_index(Quality::Dominant7, 7)};
  const HarmonyState other_key{1, 0};

  CHECK(std::exp(transition_logprob(c_major, c_major, p)) ==
        doctest::Approx(0.4995).epsilon(1e-12));
  CHECK(std::exp(transition_logprob(c_major, other_key, p)) ==
        doctest::Approx(0.001 / 11.0).epsilon(1e-12));
  // change within the key: gamma (1-rho) (f(next) + f(prev)/48) / (zf + f(prev))
  CHECK(std::exp(transition_logprob(c_major, g_seven, p)) ==
        doctest::Approx(0.029249506873532168).epsilon(1e-12));
}

TEST_CASE("transition mass splits into a normalized same-key block plus the key-change escape") {
  // Within the previous key the closed-form chord-change weights integrate to
  // gamma (1-rho), so staying in key carries mass exactly 1-rho. Key changes
  // add (rho/11) f per destination, an unnormalized escape worth rho zf in
  // total, so a full row sums to 1 - rho + rho zf rather than 1.
  const ChordInferenceParams p;
  const double zf = oracle_zf(0, p.psi);
  const std::array<HarmonyState, 3> prevs = {HarmonyState{0, 0},
                                             HarmonyState{3, chord_index(Quality::Minor, 2)},
                                             HarmonyState{11, chord_index(Quality::HalfDiminished, 5)}};
  for (const auto& prev : prevs) {
    double same_key = 0.0;
    double total = 0.0;
    for (int s = 0; s < kNumStates; ++s) {
      const HarmonyState next = state_of(s);
      const double w = std::exp(transition_logprob(prev, next, p));
      total += w;
      if (next.key == prev.key) same_key += w;
    }
    CHECK(same_key == doctest::Approx(1.0 - p.rho).epsilon(1e-9));
    CHECK(total == doctest::Approx(1.0 - p.rho + p.rho * zf).epsilon(1e-9));
  }
  double init_total = 0.0;
  for (int s = 0; s < kNumStates; ++s)
    init_total += std::exp(initial_logprob(state_of(s), p));
  CHECK(init_total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("chord templates are unit length and observation is kappa dot") {
  const ChordInferenceParams p;
  for (int chord = 0; chord < kNumFullChords; ++chord) {
    const auto c = chord_template(chord);
    double norm = 0.0;
    for (double v : c) norm += v * v;
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
  }
  PitchClassFrame y{};
  y[0] = 0.6;
  y[7] = 0.8;
  const auto c = chord_template(chord_index(Quality::Major, 0));
  CHECK(observation_logscore(y, chord_index(Quality::Major, 0), p) ==
        doctest::Approx(100.0 * (0.6 * c[0] + 0.8 * c[7])).epsilon(1e-12));
}

TEST_CASE("pitch class frames are duration weighted and unit normalized") {
  SUBCASE("whole-measure note fills both halves") {
    const auto frames = pitch_class_frames({{60, 0, 96, 4}});
    for (const auto& f : frames) {
      CHECK(f[0] == doctest::Approx(1.0));
      for (int pc = 1; pc < 12; ++pc) CHECK(f[pc] == 0.0);
    }
  }
  SUBCASE("first-half note leaves the second frame empty") {
    const auto frames = pitch_class_frames({{64, 0, 30, 4}});
    CHECK(frames[0][4] == doctest::Approx(1.0));
    for (int pc = 0; pc < 12; ++pc) CHECK(frames[1][pc] == 0.0);
  }
  SUBCASE("durations weight the frame before normalization") {
    const auto frames = pitch_class_frames({{60, 0, 24, 4}, {64, 0, 48, 4}});
    CHECK(frames[0][0] == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-12));
    CHECK(frames[0][4] == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-12));
  }
  SUBCASE("a note across the midline splits by overlap") {
    const auto frames = pitch_class_frames({{61, 40, 16, 4}});
    CHECK(frames[0][1] == doctest::Approx(1.0));
    CHECK(frames[1][1] == doctest::Approx(1.0));
  }
}

TEST_CASE("viterbi matches exhaustive search on random subset problems") {
  const ChordInferenceParams p;
  Rng rng(0xC0);
  for (int trial = 0; trial < 12; ++trial) {
    std::set<int> chosen;
    while (chosen.size() < 6) chosen.insert(rng.uniform_int(0, kNumStates - 1));
    const std::vector<int> states(chosen.begin(), chosen.end());

    const std::size_t T = static_cast<std::size_t>(rng.uniform_int(1, 4));
    std::vector<PitchClassFrame> frames(T);
    for (auto& f : frames) {
      double norm = 0.0;
      for (double& v : f) {
        v = rng.uniform();
        norm += v * v;
      }
      norm = std::sqrt(norm);
      for (double& v : f) v /= norm;
    }

    const auto got = viterbi(frames, p, states);
    const auto want = testing::oracle_viterbi(frames, p, states).states;
    REQUIRE(got.size() == T);
    for (std::size_t t = 0; t < T; ++t)
      CHECK(state_index(got[t].key, got[t].chord) == want[t]);
  }
}

TEST_CASE("viterbi tie-break prefers the lowest state, latest step first") {
  const ChordInferenceParams p;
  // two states fully symmetric under zero observations: same f (both are
  // all-in-key triads of key 0), so every path score collapses to pairs
  const int a = state_index(0, chord_index(Quality::Major, 0));   // C
  const int b = state_index(0, chord_index(Quality::Major, 5));   // F
  REQUIRE(key_membership_prob(0, chord_index(Quality::Major, 0), p.psi) ==
          key_membership_prob(0, chord_index(Quality::Major, 5), p.psi));

  std::vector<PitchClassFrame> frames(3);  // all zero
  const auto path = viterbi(frames, p, {a, b});
  for (const auto& h : path) CHECK(state_index(h.key, h.chord) == a);

  const auto want = testing::oracle_viterbi(frames, p, {a, b});
  for (std::size_t t = 0; t < 3; ++t) CHECK(want.states[t] == a);
}

TEST_CASE("single-state subset is copied through") {
  const ChordInferenceParams p;
  std::vector<PitchClassFrame> frames(4);
  frames[0][3] = 1.0;
  const int s = state_index(7, chord_index(Quality::Minor, 3));
  const auto path = viterbi(frames, p, {s});
  REQUIRE(path.size() == 4);
  for (const auto& h : path) CHECK(state_index(h.key, h.chord) == s);
}

TEST_CASE("project_to_triads folds sevenths onto their triads") {
  CHECK(project_to_triads(0) == 0);
  for (int root = 0; root < 12; ++root) {
    CHECK(project_to_triads(chord_index(Quality::Major, root)) == 1 + root);
    CHECK(project_to_triads(chord_index(Quality::Minor, root)) == 1 + 12 + root);
    CHECK(project_to_triads(chord_index(Quality::Augmented, root)) == 1 + 24 + root);
    CHECK(project_to_triads(chord_index(Quality::Diminished, root)) == 1 + 36 + root);
    CHECK(project_to_triads(chord_index(Quality::Dominant7, root)) == 1 + root);
    CHECK(project_to_triads(chord_index(Quality::Major7, root)) == 1 + root);
    CHECK(project_to_triads(chord_index(Quality::Minor7, root)) == 1 + 12 + root);
    CHECK(project_to_triads(chord_index(Quality::HalfDiminished, root)) == 1 + 36 + root);
  }
}

TEST_CASE("a held C major triad infers C major in key C") {
  const std::vector<QuantizedNote> notes = {{60, 0, 96, 4}, {64, 0, 96, 4}, {67, 0, 96, 4}};
  const auto result = infer_chords({notes});
  REQUIRE(result.measure_chords.size() == 1);
  CHECK(result.measure_chords[0][0] == 1);
  CHECK(result.measure_chords[0][1] == 1);
  CHECK(result.diagnostics[0][0].key == 0);
  CHECK(result.diagnostics[0][1].key == 0);
}

TEST_CASE("a G7 measure after C major projects to G") {
  const std::vector<QuantizedNote> c_triad = {{60, 0, 96, 4}, {64, 0, 96, 4}, {67, 0, 96, 4}};
  const std::vector<QuantizedNote> g_seven = {
      {55, 0, 96, 4}, {59, 0, 96, 4}, {62, 0, 96, 4}, {65, 0, 96, 4}};
  const auto result = infer_chords({c_triad, g_seven});
  REQUIRE(result.measure_chords.size() == 2);
  CHECK(result.measure_chords[0][0] == 1);               // C
  CHECK(result.measure_chords[1][0] == 1 + 7);           // G triad from G7
  CHECK(result.diagnostics[1][0].chord == chord_index(Quality::Dominant7, 7));
  CHECK(result.diagnostics[1][0].key == 0);              // same key throughout
}

TEST_CASE("segments past the measure cap are rejected") {
  ChordInferenceParams p;
  p.max_measures = 4;
  const std::vector<std::vector<QuantizedNote>> five(5);
  CHECK_THROWS_AS(infer_chords(five, p), DataError);
  CHECK_NOTHROW(infer_chords(std::vector<std::vector<QuantizedNote>>(4), p));
}

TEST_CASE("chord names round trip through the parser") {
  for (int c = 0; c < kNumChordClasses; ++c) {
    const auto name = chord_name(static_cast<std::uint8_t>(c));
    const auto back = parse_chord_name(name);
    REQUIRE(back.has_value());
    CHECK(*back == c);
  }
  CHECK(parse_chord_name("Db") == parse_chord_name("C#"));
  CHECK(parse_chord_name("Bb") == parse_chord_name("A#"));
  CHECK(parse_chord_name("Cb") == parse_chord_name("B"));
  CHECK(!parse_chord_name("H").has_value());
  CHECK(!parse_chord_name("Cmaj7").has_value());
  CHECK(!parse_chord_name("").has_value());
}

TEST_CASE("full chord names for diagnostics") {
  CHECK(full_chord_name(0) == "N.C.");
  CHECK(full_chord_name(chord_index(Quality::Dominant7, 0)) == "C7");
  CHECK(full_chord_name(chord_index(Quality::Major7, 7)) == "GM7");
  CHECK(full_chord_name(chord_index(Quality::HalfDiminished, 9)) == "Am7b5");
  CHECK(full_chord_name(chord_index(Quality::Augmented, 4)) == "E+");
}
