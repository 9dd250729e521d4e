#include "midispace/smf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "midispace/errors.hpp"

namespace midispace {

namespace {

class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::size_t pos, std::size_t end)
      : bytes_(bytes), pos_(pos), end_(end) {}

  std::size_t pos() const { return pos_; }
  bool done() const { return pos_ >= end_; }

  std::uint8_t u8(const char* what) {
    if (pos_ >= end_) throw ParseError(std::string("unexpected end of ") + what, pos_);
    return bytes_[pos_++];
  }

  std::uint32_t u16be(const char* what) {
    const std::uint32_t hi = u8(what), lo = u8(what);
    return (hi << 8) | lo;
  }

  std::uint32_t u32be(const char* what) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | u8(what);
    return v;
  }

  /// Variable-length quantity, at most 4 bytes per the SMF spec.
  std::uint32_t vlq(const char* what) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      const std::uint8_t b = u8(what);
      v = (v << 7) | (b & 0x7f);
      if (!(b & 0x80)) return v;
    }
    throw ParseError("variable-length quantity longer than 4 bytes", pos_);
  }

  void skip(std::size_t n, const char* what) {
    if (end_ - pos_ < n) throw ParseError(std::string("unexpected end of ") + what, pos_);
    pos_ += n;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_;
  std::size_t end_;
};

struct OpenNote {
  long onset = 0;
  int velocity = 64;
  int program = 0;
};

void parse_track(const std::vector<std::uint8_t>& bytes, std::size_t begin, std::size_t end,
                 int track_index, ParsedScore& out) {
  ByteReader r(bytes, begin, end);
  long tick = 0;
  std::uint8_t running_status = 0;
  std::array<int, 16> channel_program{};
  // (channel, pitch) -> open notes, earliest first
  std::map<std::pair<int, int>, std::vector<OpenNote>> open;

  auto close_note = [&](int channel, int pitch, long at) {
    auto it = open.find({channel, pitch});
    if (it == open.end() || it->second.empty()) return false;
    const OpenNote n = it->second.front();
    it->second.erase(it->second.begin());
    out.notes.push_back(ScoreNote{pitch, n.onset, std::max<long>(1, at - n.onset), n.velocity,
                                  n.program, channel == 9, track_index});
    return true;
  };

  bool saw_end = false;
  while (!r.done() && !saw_end) {
    tick += r.vlq("track chunk");
    out.end_tick = std::max(out.end_tick, tick);

    std::uint8_t first = r.u8("track chunk");
    std::uint8_t status;
    bool have_data = false;  // `first` already holds the first data byte
    if (first & 0x80) {
      status = first;
      if (status < 0xf0) running_status = status;
    } else {
      if (!(running_status & 0x80))
        throw ParseError("data byte with no running status", r.pos() - 1);
      status = running_status;
      have_data = true;
    }

    if (status == 0xff) {  // meta event
      const std::uint8_t meta = r.u8("meta event");
      const std::uint32_t len = r.vlq("meta event");
      if (meta == 0x2f) {
        r.skip(len, "meta event");
        saw_end = true;
      } else if (meta == 0x51) {
        if (len != 3) throw ParseError("set-tempo meta with bad length", r.pos());
        std::uint32_t usec = 0;
        for (int i = 0; i < 3; ++i) usec = (usec << 8) | r.u8("tempo meta");
        if (usec == 0) throw ParseError("set-tempo meta of zero microseconds", r.pos());
        out.tempos.push_back({tick, 60.0e6 / static_cast<double>(usec)});
      } else if (meta == 0x58) {
        if (len < 2) throw ParseError("time-signature meta with bad length", r.pos());
        const int numerator = r.u8("time-signature meta");
        const int dd = r.u8("time-signature meta");
        r.skip(len - 2, "time-signature meta");
        if (numerator == 0 || dd > 30)
          throw ParseError("degenerate time signature", r.pos());
        out.meters.push_back({tick, numerator, 1 << dd});
      } else {
        r.skip(len, "meta event");  // unknown meta events skipped
      }
      continue;
    }

    if (status == 0xf0 || status == 0xf7) {  // sysex: skip payload
      const std::uint32_t len = r.vlq("sysex event");
      r.skip(len, "sysex event");
      continue;
    }
    if (status > 0xf0)
      throw ParseError("unsupported system message 0x" + std::to_string(status), r.pos() - 1);

    const std::uint8_t type = status & 0xf0;
    const int channel = status & 0x0f;
    const std::uint8_t d1 = have_data ? first : r.u8("event data");

    switch (type) {
      case 0x80: {  // note off
        r.u8("event data");
        if (!close_note(channel, d1 & 0x7f, tick))
          out.warnings.push_back("note-off with no matching note-on skipped");
        break;
      }
      case 0x90: {  // note on (velocity 0 means off)
        const std::uint8_t vel = r.u8("event data");
        const int pitch = d1 & 0x7f;
        if (vel == 0) {
          if (!close_note(channel, pitch, tick))
            out.warnings.push_back("note-off with no matching note-on skipped");
        } else {
          // overlapping same-pitch note: close the first at this onset
          if (auto it = open.find({channel, pitch}); it != open.end() && !it->second.empty()) {
            out.warnings.push_back("overlapping note restarted; first closed at second onset");
            close_note(channel, pitch, tick);
          }
          open[{channel, pitch}].push_back({tick, vel, channel_program[channel]});
        }
        break;
      }
      case 0xa0:  // polyphonic aftertouch
      case 0xb0:  // controller
      case 0xe0:  // pitch bend
        r.u8("event data");
        break;
      case 0xc0:  // program change
        channel_program[channel] = d1 & 0x7f;
        break;
      case 0xd0:  // channel aftertouch
        break;
      default:
        throw ParseError("unhandled status byte", r.pos() - 1);
    }
  }

  for (auto& [key, list] : open) {
    for (const auto& n : list) {
      out.warnings.push_back("note-on without note-off closed at end of track");
      out.notes.push_back(ScoreNote{key.second, n.onset, std::max<long>(1, tick - n.onset),
                                    n.velocity, n.program, key.first == 9, track_index});
    }
  }
}

}  // namespace

ParsedScore parse_smf(const std::vector<std::uint8_t>& bytes) {
  ByteReader header(bytes, 0, bytes.size());
  if (bytes.size() < 14 || bytes[0] != 'M' || bytes[1] != 'T' || bytes[2] != 'h' ||
      bytes[3] != 'd')
    throw ParseError("missing MThd header", 0);
  header.skip(4, "header");
  const std::uint32_t header_len = header.u32be("header");
  if (header_len < 6) throw ParseError("MThd length shorter than 6", 4);
  const std::uint32_t format = header.u16be("header");
  const std::uint32_t declared_tracks = header.u16be("header");
  const std::uint32_t division = header.u16be("header");
  if (format == 2) throw ParseError("format-2 files are not supported", 8);
  if (format > 2) throw ParseError("unknown SMF format " + std::to_string(format), 8);
  if (division & 0x8000) throw ParseError("SMPTE time division is not supported", 12);
  if (division == 0) throw ParseError("zero ticks-per-quarter division", 12);
  header.skip(header_len - 6, "header");

  ParsedScore score;
  score.ticks_per_quarter = static_cast<int>(division);

  std::size_t pos = header.pos();
  int track_index = 0;
  while (pos < bytes.size()) {
    if (bytes.size() - pos < 8)
      throw ParseError("trailing bytes too short for a chunk header", pos);
    ByteReader chunk(bytes, pos, bytes.size());
    const std::uint32_t a = chunk.u32be("chunk id");
    const std::uint32_t len = chunk.u32be("chunk length");
    const std::size_t body = chunk.pos();
    if (bytes.size() - body < len)
      throw ParseError("truncated chunk: MTrk " + std::to_string(track_index) +
                           " declares " + std::to_string(len) + " bytes",
                       pos);
    if (a == 0x4d54726b) {  // "MTrk"
      parse_track(bytes, body, body + len, track_index, score);
      ++track_index;
    }
    // unknown chunk types are skipped per the SMF spec
    pos = body + len;
  }
  if (format == 0 && track_index > 1)
    throw ParseError("format-0 file with multiple MTrk chunks", 10);
  if (track_index == 0) throw ParseError("file contains no MTrk chunk", header.pos());
  if (declared_tracks != static_cast<std::uint32_t>(track_index))
    score.warnings.push_back("MThd track count does not match MTrk chunks found");

  std::stable_sort(score.tempos.begin(), score.tempos.end(),
                   [](const TempoEvent& x, const TempoEvent& y) { return x.tick < y.tick; });
  std::stable_sort(score.meters.begin(), score.meters.end(),
                   [](const TimeSignatureEvent& x, const TimeSignatureEvent& y) {
                     return x.tick < y.tick;
                   });
  std::stable_sort(score.notes.begin(), score.notes.end(),
                   [](const ScoreNote& x, const ScoreNote& y) {
                     return std::tie(x.onset_ticks, x.source_track, x.pitch) <
                            std::tie(y.onset_ticks, y.source_track, y.pitch);
                   });
  for (const auto& n : score.notes)
    score.end_tick = std::max(score.end_tick, n.onset_ticks + n.duration_ticks);
  return score;
}

std::vector<MeterSegment> segment_by_meter(const ParsedScore& score) {
  // collect effective state-change ticks; defaults apply from tick 0
  struct State {
    double bpm = 120.0;
    int numerator = 4;
    int denominator = 4;
  };
  std::map<long, State> at;  // change tick -> state after the change
  State current;
  at[0] = current;

  std::size_t ti = 0, mi = 0;
  std::vector<long> ticks;
  for (const auto& t : score.tempos) ticks.push_back(t.tick);
  for (const auto& m : score.meters) ticks.push_back(m.tick);
  std::sort(ticks.begin(), ticks.end());
  ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());

  for (long tick : ticks) {
    while (ti < score.tempos.size() && score.tempos[ti].tick <= tick)
      current.bpm = score.tempos[ti++].bpm;
    while (mi < score.meters.size() && score.meters[mi].tick <= tick) {
      current.numerator = score.meters[mi].numerator;
      current.denominator = score.meters[mi].denominator;
      ++mi;
    }
    at[tick] = current;
  }

  // drop consecutive entries with identical state (no effective change)
  std::vector<std::pair<long, State>> changes;
  for (const auto& [tick, st] : at) {
    if (!changes.empty()) {
      const State& prev = changes.back().second;
      if (prev.bpm == st.bpm && prev.numerator == st.numerator &&
          prev.denominator == st.denominator)
        continue;
    }
    changes.push_back({tick, st});
  }

  const long end = std::max<long>(score.end_tick, changes.back().first);
  std::vector<MeterSegment> segments;
  for (std::size_t i = 0; i < changes.size(); ++i) {
    MeterSegment seg;
    seg.ticks_per_quarter = score.ticks_per_quarter;
    seg.tempo_bpm = changes[i].second.bpm;
    seg.numerator = changes[i].second.numerator;
    seg.denominator = changes[i].second.denominator;
    seg.start_tick = changes[i].first;
    seg.end_tick = (i + 1 < changes.size()) ? changes[i + 1].first : end;
    segments.push_back(std::move(seg));
  }

  for (const auto& n : score.notes) {
    // the note belongs to the segment containing its onset; clip at the end
    for (auto& seg : segments) {
      const bool last = seg.end_tick == end;
      if (n.onset_ticks >= seg.start_tick && (n.onset_ticks < seg.end_tick || last)) {
        ScoreNote clipped = n;
        clipped.duration_ticks =
            std::max<long>(1, std::min(n.onset_ticks + n.duration_ticks, seg.end_tick) -
                                  n.onset_ticks);
        seg.notes.push_back(clipped);
        break;
      }
    }
  }
  return segments;
}

namespace {

void push_u16be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back((v >> 8) & 0xff);
  out.push_back(v & 0xff);
}

void push_u32be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back((v >> shift) & 0xff);
}

void push_vlq(std::vector<std::uint8_t>& out, std::uint32_t v) {
  std::uint8_t stack[5];
  int n = 0;
  stack[n++] = v & 0x7f;
  v >>= 7;
  while (v) {
    stack[n++] = 0x80 | (v & 0x7f);
    v >>= 7;
  }
  while (n) out.push_back(stack[--n]);
}

struct WireEvent {
  long tick;
  int order;  // 0 = program change, 1 = note-off, 2 = note-on
  int pitch;
  int velocity;
};

// One SMF track per model track slot. The same slot may hold drums in one
// measure and a pitched instrument in another (sorting places drums last and
// track counts vary), and drums must stay on channel 10, so a slot splits
// into at most two wire tracks keyed by drum-ness.
struct WireTrack {
  std::vector<WireEvent> events;
  int last_program = -1;
};

}  // namespace

std::vector<std::uint8_t> write_smf(const std::vector<Measure>& measures, double tempo_bpm,
                                    int ticks_per_quarter) {
  if (ticks_per_quarter <= 0 || ticks_per_quarter % kStepsPerQuarter != 0)
    throw DataError("ticks_per_quarter must be a positive multiple of 24");
  if (tempo_bpm <= 0) throw DataError("tempo must be positive");
  const long ticks_per_step = ticks_per_quarter / kStepsPerQuarter;
  const long measure_ticks = 4L * ticks_per_quarter;

  std::map<std::pair<int, bool>, WireTrack> tracks;  // (slot, is_drum) -> track

  for (std::size_t mi = 0; mi < measures.size(); ++mi) {
    const long base = static_cast<long>(mi) * measure_ticks;
    for (int slot = 0; slot < kNumTrackSlots; ++slot) {
      const TokenSeq& tokens = measures[mi].tracks[slot];
      if (is_missing_track(tokens)) continue;
      TrackDecode d = decode_track(tokens);
      const bool is_drum = d.program == kDrumProgram;
      WireTrack& wt = tracks[{slot, is_drum}];
      const int program = is_drum ? 0 : d.program;
      if (program != wt.last_program) {
        wt.events.push_back({base, 0, 0, program});
        wt.last_program = program;
      }
      for (const auto& n : d.notes) {
        const long on = base + n.onset * ticks_per_step;
        const long off = base + (n.onset + n.duration) * ticks_per_step;
        wt.events.push_back({on, 2, n.pitch, dequantize_velocity(n.velocity_bin)});
        wt.events.push_back({off, 1, n.pitch, 0});
      }
    }
  }

  int non_drum = 0;
  for (const auto& [key, wt] : tracks)
    if (!key.second) ++non_drum;
  if (non_drum > 15) throw DataError("more than 15 non-drum tracks cannot share channels");

  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'M', 'T', 'h', 'd'});
  push_u32be(out, 6);
  push_u16be(out, 1);  // format 1
  push_u16be(out, static_cast<std::uint32_t>(tracks.size() + 1));
  push_u16be(out, static_cast<std::uint32_t>(ticks_per_quarter));

  const long total_ticks = static_cast<long>(measures.size()) * measure_ticks;

  auto emit_track = [&](const std::vector<std::uint8_t>& payload) {
    out.insert(out.end(), {'M', 'T', 'r', 'k'});
    push_u32be(out, static_cast<std::uint32_t>(payload.size()));
    out.insert(out.end(), payload.begin(), payload.end());
  };

  {  // conductor track: tempo and 4/4, ending at the last measure boundary
    std::vector<std::uint8_t> t;
    push_vlq(t, 0);
    t.insert(t.end(), {0xff, 0x58, 0x04, 0x04, 0x02, 0x18, 0x08});
    push_vlq(t, 0);
    const auto usec = static_cast<std::uint32_t>(std::llround(60.0e6 / tempo_bpm));
    t.insert(t.end(), {0xff, 0x51, 0x03});
    t.push_back((usec >> 16) & 0xff);
    t.push_back((usec >> 8) & 0xff);
    t.push_back(usec & 0xff);
    push_vlq(t, static_cast<std::uint32_t>(total_ticks));
    t.insert(t.end(), {0xff, 0x2f, 0x00});
    emit_track(t);
  }

  int next_channel = 0;
  for (auto& [key, wt] : tracks) {
    int channel;
    if (key.second) {
      channel = 9;
    } else {
      if (next_channel == 9) ++next_channel;
      channel = next_channel++;
    }

    std::stable_sort(wt.events.begin(), wt.events.end(),
                     [](const WireEvent& a, const WireEvent& b) {
                       return std::tie(a.tick, a.order, a.pitch) <
                              std::tie(b.tick, b.order, b.pitch);
                     });

    std::vector<std::uint8_t> t;
    long now = 0;
    for (const auto& e : wt.events) {
      push_vlq(t, static_cast<std::uint32_t>(e.tick - now));
      now = e.tick;
      if (e.order == 0) {
        t.push_back(static_cast<std::uint8_t>(0xc0 | channel));
        t.push_back(static_cast<std::uint8_t>(e.velocity));
      } else {
        // note-off written as note-on with velocity 0
        t.push_back(static_cast<std::uint8_t>(0x90 | channel));
        t.push_back(static_cast<std::uint8_t>(e.pitch));
        t.push_back(static_cast<std::uint8_t>(e.order == 2 ? e.velocity : 0));
      }
    }
    push_vlq(t, static_cast<std::uint32_t>(total_ticks - now));
    t.insert(t.end(), {0xff, 0x2f, 0x00});
    emit_track(t);
  }

  return out;
}

}  // namespace midispace
