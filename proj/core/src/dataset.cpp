#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "midispace/corpus.hpp"
#include "midispace/errors.hpp"

namespace midispace {

namespace {
using ordered_json = nlohmann::ordered_json;
}

std::string measure_to_json(const Measure& m) {
  ordered_json j;
  j["tracks"] = ordered_json::array();
  for (const auto& track : m.tracks) {
    ordered_json arr = ordered_json::array();
    for (Token t : track) arr.push_back(static_cast<int>(t));
    j["tracks"].push_back(std::move(arr));
  }
  j["chords"] = {static_cast<int>(m.chords[0]), static_cast<int>(m.chords[1])};
  return j.dump();
}

Measure measure_from_json(const std::string& line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad dataset line: ") + e.what());
  }
  if (!j.contains("tracks") || !j.contains("chords"))
    throw ParseError("dataset line missing tracks or chords");
  const auto& tracks = j["tracks"];
  const auto& chords = j["chords"];
  if (!tracks.is_array() || tracks.size() != static_cast<std::size_t>(kNumTrackSlots))
    throw ParseError("dataset line needs exactly 8 tracks");
  if (!chords.is_array() || chords.size() != 2)
    throw ParseError("dataset line needs exactly 2 chords");

  Measure m;
  for (int k = 0; k < kNumTrackSlots; ++k) {
    if (!tracks[k].is_array()) throw ParseError("track is not an array");
    for (const auto& v : tracks[k]) {
      if (!v.is_number_integer()) throw ParseError("token is not an integer");
      const long t = v.get<long>();
      if (t < 0 || t >= kVocabSize) throw ParseError("token out of range");
      m.tracks[k].push_back(static_cast<Token>(t));
    }
    if (m.tracks[k].empty()) throw ParseError("empty track sequence");
  }
  for (int i = 0; i < 2; ++i) {
    if (!chords[i].is_number_integer()) throw ParseError("chord class is not an integer");
    const long c = chords[i].get<long>();
    if (c < 0 || c >= kNumChordClasses) throw ParseError("chord class out of range");
    m.chords[i] = static_cast<std::uint8_t>(c);
  }
  return m;
}

void write_dataset(const std::string& path, const std::vector<Measure>& measures) {
  std::ofstream out(path, std::ios::binary);  // binary keeps \n exact on any platform
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (const auto& m : measures) out << measure_to_json(m) << '\n';
}

std::vector<Measure> read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::vector<Measure> measures;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    measures.push_back(measure_from_json(line));
  }
  return measures;
}

std::string stats_to_json(const DatasetStats& stats) {
  ordered_json j;
  j["measures_seen"] = stats.measures_seen;
  j["discarded_bad_length"] = stats.discarded_bad_length;
  j["discarded_track_count"] = stats.discarded_track_count;
  j["discarded_event_count"] = stats.discarded_event_count;
  j["duplicates_removed"] = stats.duplicates_removed;
  j["retained"] = stats.retained;
  j["segments_discarded_too_long"] = stats.segments_discarded_too_long;
  j["files_skipped"] = stats.files_skipped;
  return j.dump(2);
}

}  // namespace midispace
