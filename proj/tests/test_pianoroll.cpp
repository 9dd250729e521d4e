#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "midispace/errors.hpp"
#include "midispace/pianoroll.hpp"
#include "support/generators.hpp"

using namespace midispace;

namespace {

Measure two_voice_measure() {
  std::vector<TrackContent> contents;
  contents.push_back({{{60, 0, 24, 4}, {64, 24, 12, 4}}, 0});    // piano, family 0
  contents.push_back({{{43, 0, 48, 5}}, 41});                    // strings, family 5
  return encode_measure(contents, {1, 1});
}

}  // namespace

TEST_CASE("format names parse strictly") {
  CHECK(parse_render_format("svg") == RenderFormat::Svg);
  CHECK(parse_render_format("text") == RenderFormat::Text);
  CHECK_THROWS_AS(parse_render_format("png"), ConfigError);
  CHECK_THROWS_AS(parse_render_format(""), ConfigError);
}

TEST_CASE("instrument families split the program space") {
  CHECK(instrument_family(0) == 0);
  CHECK(instrument_family(7) == 0);
  CHECK(instrument_family(8) == 1);
  CHECK(instrument_family(41) == 5);
  CHECK(instrument_family(127) == 15);
  CHECK(instrument_family(kDrumProgram) == 16);
}

TEST_CASE("text grid marks onsets, continuations and silence") {
  RenderOptions opt;
  opt.format = RenderFormat::Text;
  const std::string text = render_measures({two_voice_measure()}, opt);

  std::istringstream lines(text);
  std::string line;
  int rows = 0;
  bool saw_piano_onset = false, saw_strings_onset = false;
  while (std::getline(lines, line)) {
    ++rows;
    REQUIRE(line.size() >= 4);
    REQUIRE(line[3] == '|');
    const std::string cells = line.substr(4);
    REQUIRE(cells.size() == 96);
    const int pitch = std::stoi(line.substr(0, 3));
    if (pitch == 60) {
      CHECK(cells[0] == '0');   // piano onset
      CHECK(cells[1] == '-');
      CHECK(cells[23] == '-');
      CHECK(cells[24] == '.');
      saw_piano_onset = true;
    }
    if (pitch == 43) {
      CHECK(cells[0] == '5');   // strings onset
      CHECK(cells[47] == '-');
      CHECK(cells[48] == '.');
      saw_strings_onset = true;
    }
  }
  CHECK(rows == 128);
  CHECK(saw_piano_onset);
  CHECK(saw_strings_onset);
}

TEST_CASE("rows are ordered top row highest pitch") {
  RenderOptions opt;
  opt.format = RenderFormat::Text;
  const std::string text = render_measures({two_voice_measure()}, opt);
  std::istringstream lines(text);
  std::string line;
  int prev = 1000;
  while (std::getline(lines, line)) {
    const int pitch = std::stoi(line.substr(0, 3));
    CHECK(pitch < prev);
    prev = pitch;
  }
}

TEST_CASE("text round trip recovers every note") {
  Rng rng(0x91);
  RenderOptions opt;
  opt.format = RenderFormat::Text;
  for (int trial = 0; trial < 30; ++trial) {
    const Measure m = testing::random_measure(rng);
    // collect the expected cells; skip measures with per-pitch overlap
    std::vector<RenderedNote> want;
    bool overlap = false;
    for (const auto& content : decode_measure(m)) {
      const int fam = instrument_family(content.program);
      for (const auto& n : content.notes) {
        for (const auto& w : want)
          if (w.pitch == n.pitch && n.onset < w.onset + w.duration &&
              w.onset < n.onset + n.duration)
            overlap = true;
        want.push_back({n.pitch, n.onset, n.duration, fam});
      }
    }
    if (overlap) continue;

    auto got = parse_text_grid(render_measures({m}, opt));
    auto key = [](const RenderedNote& a, const RenderedNote& b) {
      return std::tie(a.pitch, a.onset, a.duration, a.family) <
             std::tie(b.pitch, b.onset, b.duration, b.family);
    };
    std::sort(got.begin(), got.end(), key);
    std::sort(want.begin(), want.end(), key);
    CHECK(got == want);
  }
}

TEST_CASE("measures concatenate left to right") {
  RenderOptions opt;
  opt.format = RenderFormat::Text;
  const Measure m = two_voice_measure();
  const std::string one = render_measures({m}, opt);
  const std::string two = render_measures({m, m}, opt);
  std::istringstream l1(one), l2(two);
  std::string a, b;
  while (std::getline(l1, a) && std::getline(l2, b)) {
    REQUIRE(b.size() == a.size() + 96);
    CHECK(b.substr(0, a.size()) == a);
    CHECK(b.substr(a.size()) == a.substr(4));  // second copy minus the label
  }

  const auto notes = parse_text_grid(two);
  int late_onsets = 0;
  for (const auto& n : notes)
    if (n.onset >= 96) ++late_onsets;
  CHECK(late_onsets == 3);
}

TEST_CASE("octave folding yields 12 pitch-class rows") {
  RenderOptions opt;
  opt.format = RenderFormat::Text;
  opt.strip_octaves = true;
  const std::string text = render_measures({two_voice_measure()}, opt);
  std::istringstream lines(text);
  std::string line;
  int rows = 0;
  bool saw_g = false;
  while (std::getline(lines, line)) {
    ++rows;
    const int pc = std::stoi(line.substr(0, 3));
    CHECK(pc >= 0);
    CHECK(pc < 12);
    if (pc == 7) {
      CHECK(line[4] == '5');  // G2 from the strings voice
      saw_g = true;
    }
  }
  CHECK(rows == 12);
  CHECK(saw_g);
}

TEST_CASE("strip_drums removes family 16") {
  std::vector<TrackContent> contents;
  contents.push_back({{{60, 0, 24, 4}}, 0});
  contents.push_back({{{36, 0, 24, 4}, {42, 48, 12, 4}}, kDrumProgram});
  const Measure m = encode_measure(contents, {0, 0});

  RenderOptions opt;
  opt.format = RenderFormat::Text;
  auto with = parse_text_grid(render_measures({m}, opt));
  CHECK(with.size() == 3);

  opt.strip_drums = true;
  auto without = parse_text_grid(render_measures({m}, opt));
  REQUIRE(without.size() == 1);
  CHECK(without[0].pitch == 60);
  CHECK(without[0].family == 0);
}

TEST_CASE("svg output is deterministic and structurally sound") {
  RenderOptions opt;  // svg default
  const Measure m = two_voice_measure();
  const std::string a = render_measures({m}, opt);
  const std::string b = render_measures({m}, opt);
  CHECK(a == b);
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("</svg>") != std::string::npos);
  CHECK(a.find("<rect") != std::string::npos);
  // one background rect plus at least one per note
  int rects = 0;
  for (std::size_t pos = a.find("<rect"); pos != std::string::npos;
       pos = a.find("<rect", pos + 1))
    ++rects;
  CHECK(rects >= 4);
}

TEST_CASE("text grid parser rejects damage") {
  RenderOptions opt;
  opt.format = RenderFormat::Text;
  const std::string good = render_measures({two_voice_measure()}, opt);

  std::string bad_label = good;
  bad_label[0] = 'x';
  CHECK_THROWS_AS(parse_text_grid(bad_label), ParseError);

  std::string bad_cell = good;
  bad_cell[bad_cell.find('|') + 1 + 3] = '?';
  CHECK_THROWS_AS(parse_text_grid(bad_cell), ParseError);

  // continuation with no onset before it
  std::string orphan = good;
  const auto row = orphan.find("\n 60|");
  REQUIRE(row != std::string::npos);
  orphan[row + 5] = '-';
  CHECK_THROWS_AS(parse_text_grid(orphan), ParseError);
}

TEST_CASE("empty input renders an empty grid") {
  RenderOptions opt;
  opt.format = RenderFormat::Text;
  const std::string text = render_measures({}, opt);
  CHECK(parse_text_grid(text).empty());
}
