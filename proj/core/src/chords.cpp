#include "midispace/chords.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "midispace/errors.hpp"

namespace midispace::chords {

namespace {

constexpr int kQualityIntervals[kNumQualities][4] = {
    {0, 4, 7, -1},   // major
    {0, 3, 7, -1},   // minor
    {0, 4, 8, -1},   // augmented
    {0, 3, 6, -1},   // diminished
    {0, 4, 7, 10},   // dominant-7
    {0, 4, 7, 11},   // major-7
    {0, 3, 7, 10},   // minor-7
    {0, 3, 6, 10},   // half-diminished
};

constexpr bool kMajorScale[12] = {true,  false, true,  false, true,  true,
                                  false, true,  false, true,  false, true};

constexpr double kBinomial[5][5] = {
    {1, 0, 0, 0, 0}, {1, 1, 0, 0, 0}, {1, 2, 1, 0, 0}, {1, 3, 3, 1, 0}, {1, 4, 6, 4, 1}};

// f values for one psi, shared across transition_logprob calls
struct FTable {
  double psi = -1.0;
  double f[kNumKeys][kNumFullChords];
  double zf[kNumKeys];
};

const FTable& f_table(double psi) {
  thread_local FTable table;
  if (table.psi != psi) {
    table.psi = psi;
    for (int key = 0; key < kNumKeys; ++key) {
      double z = 0.0;
      for (int chord = 0; chord < kNumFullChords; ++chord) {
        table.f[key][chord] = key_membership_prob(key, chord, psi);
        z += table.f[key][chord];
      }
      table.zf[key] = z;
    }
  }
  return table;
}

}  // namespace

std::vector<int> chord_tones(int chord) {
  if (chord == 0) return {};
  const int q = (chord - 1) / 12;
  const int root = (chord - 1) % 12;
  std::vector<int> tones;
  for (int interval : kQualityIntervals[q]) {
    if (interval < 0) break;
    tones.push_back((root + interval) % 12);
  }
  return tones;
}

std::array<double, 12> chord_template(int chord) {
  std::array<double, 12> c{};
  const auto tones = chord_tones(chord);
  if (tones.empty()) {
    c.fill(1.0 / std::sqrt(12.0));
    return c;
  }
  const double w = 1.0 / std::sqrt(static_cast<double>(tones.size()));
  for (int pc : tones) c[pc] = w;
  return c;
}

double key_membership_prob(int key, int chord, double psi) {
  if (chord == 0) return 1.0;
  const auto tones = chord_tones(chord);
  const int n = static_cast<int>(tones.size());
  int k = 0;
  for (int pc : tones)
    if (!kMajorScale[((pc - key) % 12 + 12) % 12]) ++k;
  return kBinomial[n][k] * std::pow(psi, k) * std::pow(1.0 - psi, n - k);
}

double transition_logprob(const HarmonyState& prev, const HarmonyState& next,
                          const ChordInferenceParams& params) {
  const FTable& ft = f_table(params.psi);
  if (prev.key != next.key)
    return std::log(params.rho / 11.0) + std::log(ft.f[next.key][next.chord]);
  if (prev.chord == next.chord)
    return std::log((1.0 - params.gamma) * (1.0 - params.rho));
  // g summed over the chords other than prev's collapses to zf + f(prev):
  // sum_{c != cp} (f(c) + f(cp)/48) = (zf - f(cp)) + 96 * f(cp)/48
  const double f_prev = ft.f[prev.key][prev.chord];
  const double g = ft.f[next.key][next.chord] + f_prev / 48.0;
  const double g_total = ft.zf[prev.key] + f_prev;
  return std::log(params.gamma * (1.0 - params.rho)) + std::log(g) - std::log(g_total);
}

double initial_logprob(const HarmonyState& state, const ChordInferenceParams& params) {
  const FTable& ft = f_table(params.psi);
  return std::log(ft.f[state.key][state.chord] / ft.zf[state.key] / 12.0);
}

double observation_logscore(const PitchClassFrame& frame, int chord,
                            const ChordInferenceParams& params) {
  const auto c = chord_template(chord);
  double dot = 0.0;
  for (int i = 0; i < 12; ++i) dot += frame[i] * c[i];
  return params.kappa * dot;
}

std::array<PitchClassFrame, 2> pitch_class_frames(const std::vector<QuantizedNote>& notes) {
  std::array<PitchClassFrame, 2> frames{};
  for (const auto& n : notes) {
    const int begin = n.onset;
    const int end = n.onset + n.duration;
    for (int half = 0; half < 2; ++half) {
      const int lo = half * 48, hi = lo + 48;
      const int overlap = std::min(end, hi) - std::max(begin, lo);
      if (overlap > 0) frames[half][n.pitch % 12] += overlap;
    }
  }
  for (auto& frame : frames) {
    double norm = 0.0;
    for (double v : frame) norm += v * v;
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double& v : frame) v /= norm;
    }
  }
  return frames;
}

std::vector<HarmonyState> viterbi(const std::vector<PitchClassFrame>& frames,
                                  const ChordInferenceParams& params,
                                  const std::vector<int>& subset) {
  if (frames.empty()) return {};

  std::vector<int> states = subset;
  if (states.empty()) {
    states.resize(kNumStates);
    for (int i = 0; i < kNumStates; ++i) states[i] = i;
  }
  const int n = static_cast<int>(states.size());
  const std::size_t T = frames.size();

  std::vector<double> trans(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const HarmonyState prev = state_of(states[i]);
    for (int j = 0; j < n; ++j)
      trans[static_cast<std::size_t>(i) * n + j] =
          transition_logprob(prev, state_of(states[j]), params);
  }

  // obs depends only on the chord; share the value across keys
  std::vector<double> obs(n);
  auto fill_obs = [&](const PitchClassFrame& frame) {
    std::array<double, kNumFullChords> by_chord;
    std::array<bool, kNumFullChords> have{};
    for (int j = 0; j < n; ++j) {
      const int chord = state_of(states[j]).chord;
      if (!have[chord]) {
        by_chord[chord] = observation_logscore(frame, chord, params);
        have[chord] = true;
      }
      obs[j] = by_chord[chord];
    }
  };

  std::vector<double> delta(n), next_delta(n);
  std::vector<std::vector<int>> back(T, std::vector<int>(n, 0));

  fill_obs(frames[0]);
  for (int j = 0; j < n; ++j)
    delta[j] = initial_logprob(state_of(states[j]), params) + obs[j];

  for (std::size_t t = 1; t < T; ++t) {
    fill_obs(frames[t]);
    for (int j = 0; j < n; ++j) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (int i = 0; i < n; ++i) {
        const double cand = delta[i] + trans[static_cast<std::size_t>(i) * n + j];
        if (cand > best) {
          best = cand;
          arg = i;
        }
      }
      next_delta[j] = best + obs[j];
      back[t][j] = arg;
    }
    delta.swap(next_delta);
  }

  int final_state = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < n; ++j) {
    if (delta[j] > best) {
      best = delta[j];
      final_state = j;
    }
  }

  std::vector<HarmonyState> path(T);
  int s = final_state;
  for (std::size_t t = T; t-- > 0;) {
    path[t] = state_of(states[s]);
    if (t > 0) s = back[t][s];
  }
  return path;
}

std::uint8_t project_to_triads(int chord) {
  if (chord == 0) return 0;
  const int q = (chord - 1) / 12;
  const int root = (chord - 1) % 12;
  static constexpr int kTriadOf[kNumQualities] = {0, 1, 2, 3, 0, 0, 1, 3};
  return static_cast<std::uint8_t>(1 + kTriadOf[q] * 12 + root);
}

InferredHarmony infer_chords(const std::vector<std::vector<QuantizedNote>>& measures,
                             const ChordInferenceParams& params) {
  if (static_cast<int>(measures.size()) > params.max_measures)
    throw DataError("segment longer than " + std::to_string(params.max_measures) +
                    " measures");
  std::vector<PitchClassFrame> frames;
  frames.reserve(measures.size() * 2);
  for (const auto& notes : measures) {
    const auto pair = pitch_class_frames(notes);
    frames.push_back(pair[0]);
    frames.push_back(pair[1]);
  }

  const auto path = viterbi(frames, params);

  InferredHarmony out;
  out.measure_chords.resize(measures.size());
  out.diagnostics.resize(measures.size());
  for (std::size_t m = 0; m < measures.size(); ++m) {
    for (int half = 0; half < 2; ++half) {
      const HarmonyState& h = path[m * 2 + half];
      out.measure_chords[m][half] = project_to_triads(h.chord);
      out.diagnostics[m][half] = h;
    }
  }
  return out;
}

namespace {
constexpr const char* kRootNames[12] = {"C",  "C#", "D",  "D#", "E",  "F",
                                        "F#", "G",  "G#", "A",  "A#", "B"};
constexpr const char* kTriadSuffix[4] = {"", "m", "+", "o"};
constexpr const char* kFullSuffix[kNumQualities] = {"",  "m",  "+",  "o",
                                                    "7", "M7", "m7", "m7b5"};
}  // namespace

std::string chord_name(std::uint8_t chord_class) {
  if (chord_class == 0) return "N.C.";
  const int q = (chord_class - 1) / 12;
  const int root = (chord_class - 1) % 12;
  return std::string(kRootNames[root]) + kTriadSuffix[q];
}

std::string full_chord_name(int chord) {
  if (chord == 0) return "N.C.";
  const int q = (chord - 1) / 12;
  const int root = (chord - 1) % 12;
  return std::string(kRootNames[root]) + kFullSuffix[q];
}

std::optional<std::uint8_t> parse_chord_name(const std::string& name) {
  if (name == "N.C." || name == "NC" || name == "N.C") return 0;
  if (name.empty()) return std::nullopt;
  const char letter = name[0];
  static constexpr int kLetterPc[7] = {9, 11, 0, 2, 4, 5, 7};  // A..G
  if (letter < 'A' || letter > 'G') return std::nullopt;
  int root = kLetterPc[letter - 'A'];
  std::size_t pos = 1;
  if (pos < name.size() && (name[pos] == '#' || name[pos] == 'b')) {
    root = (root + (name[pos] == '#' ? 1 : 11)) % 12;
    ++pos;
  }
  const std::string suffix = name.substr(pos);
  for (int q = 0; q < 4; ++q) {
    if (suffix == kTriadSuffix[q]) return static_cast<std::uint8_t>(1 + q * 12 + root);
  }
  return std::nullopt;
}

}  // namespace midispace::chords
