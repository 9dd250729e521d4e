// Generates the bundled mini corpus: a deterministic set of small MIDI files
// covering the ingest pipeline's paths (meter changes, format 0, running
// status, duplicates, discard reasons, tempo changes, one corrupt file).
// The SMF bytes are assembled by hand here, independently of the library's
// writer, so the corpus also cross-checks the parser.
#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace {

using Bytes = std::vector<std::uint8_t>;

void u32be(Bytes& b, std::uint32_t v) {
  b.push_back(v >> 24);
  b.push_back((v >> 16) & 0xff);
  b.push_back((v >> 8) & 0xff);
  b.push_back(v & 0xff);
}

void u16be(Bytes& b, std::uint16_t v) {
  b.push_back(v >> 8);
  b.push_back(v & 0xff);
}

/// Events may be added in any order; finish() sorts by tick (stable, so
/// same-tick events keep insertion order) and delta-encodes.
class Track {
 public:
  void add(long tick, std::initializer_list<std::uint8_t> bytes) {
    events_.push_back({tick, Bytes(bytes)});
  }

  void on(long tick, int ch, int pitch, int vel) {
    add(tick, {static_cast<std::uint8_t>(0x90 | ch), static_cast<std::uint8_t>(pitch),
               static_cast<std::uint8_t>(vel)});
  }
  void off(long tick, int ch, int pitch) {
    add(tick, {static_cast<std::uint8_t>(0x80 | ch), static_cast<std::uint8_t>(pitch), 64});
  }
  void program(long tick, int ch, int prog) {
    add(tick, {static_cast<std::uint8_t>(0xC0 | ch), static_cast<std::uint8_t>(prog)});
  }
  void tempo(long tick, long us_per_quarter) {
    add(tick, {0xFF, 0x51, 0x03, static_cast<std::uint8_t>(us_per_quarter >> 16),
               static_cast<std::uint8_t>((us_per_quarter >> 8) & 0xff),
               static_cast<std::uint8_t>(us_per_quarter & 0xff)});
  }
  void meter(long tick, int num, int dd) {
    add(tick, {0xFF, 0x58, 0x04, static_cast<std::uint8_t>(num),
               static_cast<std::uint8_t>(dd), 24, 8});
  }

  Bytes finish(long end_tick) {
    std::stable_sort(events_.begin(), events_.end(),
                     [](const Event& a, const Event& b) { return a.tick < b.tick; });
    Bytes data;
    long last = 0;
    for (const auto& e : events_) {
      vlq(data, e.tick - last);
      last = e.tick;
      data.insert(data.end(), e.bytes.begin(), e.bytes.end());
    }
    vlq(data, end_tick - last);
    data.push_back(0xFF);
    data.push_back(0x2F);
    data.push_back(0x00);

    Bytes out = {'M', 'T', 'r', 'k'};
    u32be(out, static_cast<std::uint32_t>(data.size()));
    out.insert(out.end(), data.begin(), data.end());
    return out;
  }

 private:
  struct Event {
    long tick;
    Bytes bytes;
  };

  static void vlq(Bytes& out, long delta) {
    std::uint8_t stack[4];
    int n = 0;
    do {
      stack[n++] = delta & 0x7f;
      delta >>= 7;
    } while (delta > 0);
    while (n > 1) out.push_back(stack[--n] | 0x80);
    out.push_back(stack[0]);
  }

  std::vector<Event> events_;
};

Bytes file_bytes(int format, int tpq, const std::vector<Bytes>& tracks) {
  Bytes out = {'M', 'T', 'h', 'd'};
  u32be(out, 6);
  u16be(out, static_cast<std::uint16_t>(format));
  u16be(out, static_cast<std::uint16_t>(tracks.size()));
  u16be(out, static_cast<std::uint16_t>(tpq));
  for (const auto& t : tracks) out.insert(out.end(), t.begin(), t.end());
  return out;
}

void save(const std::string& dir, const std::string& name, const Bytes& bytes) {
  const auto path = std::filesystem::path(dir) / name;
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  std::printf("%s (%zu bytes)\n", path.string().c_str(), bytes.size());
}

// file 1: piano arpeggios over a bass line, 8 measures of 4/4 at tpq 480
void make_piano_bass(const std::string& dir) {
  const int tpq = 480, q = tpq, meas = 4 * tpq;
  Track meta;
  meta.meter(0, 4, 2);
  meta.tempo(0, 600000);  // 100 bpm

  Track piano;
  piano.program(0, 0, 0);
  const int roots[8] = {60, 65, 67, 60, 57, 65, 62, 60};
  for (int m = 0; m < 8; ++m) {
    const int base = roots[m];
    const int arp[4] = {base, base + 4, base + 7, base + 12};
    for (int n = 0; n < 4; ++n) {
      piano.on(m * meas + n * q, 0, arp[n], 80 + 4 * n);
      piano.off(m * meas + n * q + q - 40, 0, arp[n]);
    }
  }

  Track bass;
  bass.program(0, 1, 33);
  for (int m = 0; m < 8; ++m) {
    bass.on(m * meas, 1, roots[m] - 24, 96);
    bass.off(m * meas + 2 * q, 1, roots[m] - 24);
    bass.on(m * meas + 2 * q, 1, roots[m] - 17, 96);
    bass.off(m * meas + 4 * q, 1, roots[m] - 17);
  }

  save(dir, "01_piano_bass.mid",
       file_bytes(1, tpq,
                  {meta.finish(8 * meas), piano.finish(8 * meas), bass.finish(8 * meas)}));
}

// file 2: keys + strings + drums, 6 measures at tpq 240
void make_band(const std::string& dir) {
  const int tpq = 240, meas = 4 * tpq;
  Track meta;
  meta.meter(0, 4, 2);
  meta.tempo(0, 500000);

  Track keys;
  keys.program(0, 0, 4);
  for (int m = 0; m < 6; ++m)
    for (int c : {64, 67, 71}) {
      keys.on(m * meas, 0, c + m, 70);
      keys.off(m * meas + 3 * tpq, 0, c + m);
    }

  Track strings;
  strings.program(0, 1, 48);
  for (int m = 0; m < 6; ++m) {
    strings.on(m * meas, 1, 52 + m, 60);
    strings.off((m + 1) * meas, 1, 52 + m);
  }

  Track drums;
  for (int m = 0; m < 6; ++m)
    for (int beat = 0; beat < 4; ++beat) {
      const long t = m * meas + beat * tpq;
      const int drum = beat % 2 ? 38 : 36;
      drums.on(t, 9, drum, 100);
      drums.off(t + tpq / 2, 9, drum);
      drums.on(t, 9, 42, 64);
      drums.off(t + tpq / 4, 9, 42);
    }

  save(dir, "02_band.mid",
       file_bytes(1, tpq,
                  {meta.finish(6 * meas), keys.finish(6 * meas), strings.finish(6 * meas),
                   drums.finish(6 * meas)}));
}

// file 3: 4/4, then 3/4, then 4/4 again; the 3/4 span must be discarded
void make_meters(const std::string& dir) {
  const int tpq = 96, m44 = 4 * tpq, m34 = 3 * tpq;
  const long change1 = 2 * m44, change2 = change1 + 2 * m34;
  const long end = change2 + 2 * m44;
  Track meta;
  meta.meter(0, 4, 2);
  meta.tempo(0, 500000);
  meta.meter(change1, 3, 2);
  meta.meter(change2, 4, 2);

  Track flute;
  flute.program(0, 0, 73);
  for (long t = 0; t + tpq <= end; t += tpq) {
    flute.on(t, 0, 72 + static_cast<int>((t / tpq) % 8), 75);
    flute.off(t + tpq - 8, 0, 72 + static_cast<int>((t / tpq) % 8));
  }

  Track harp;
  harp.program(0, 1, 46);
  for (long t = 0; t + 2 * tpq <= end; t += 2 * tpq) {
    harp.on(t, 1, 48 + static_cast<int>((t / (2 * tpq)) % 5), 80);
    harp.off(t + 2 * tpq, 1, 48 + static_cast<int>((t / (2 * tpq)) % 5));
  }

  save(dir, "03_meters.mid",
       file_bytes(1, tpq, {meta.finish(end), flute.finish(end), harp.finish(end)}));
}

// file 4: format 0, two channels interleaved in one track
void make_format0(const std::string& dir) {
  const int tpq = 480, meas = 4 * tpq;
  Track t;
  t.meter(0, 4, 2);
  t.tempo(0, 545455);  // 110 bpm
  t.program(0, 0, 24);
  t.program(0, 1, 40);
  for (int m = 0; m < 4; ++m) {
    for (int n = 0; n < 4; ++n) {
      const int g = 55 + ((m * 3 + n * 5) % 13);
      t.on(m * meas + n * tpq, 0, g, 72);
      t.off(m * meas + n * tpq + tpq / 2, 0, g);
    }
    t.on(m * meas, 1, 67 + m, 64);
    t.off((m + 1) * meas - 60, 1, 67 + m);
  }
  save(dir, "04_format0.mid", file_bytes(0, tpq, {t.finish(4 * meas)}));
}

// file 5: running status and velocity-0 note-offs
void make_running(const std::string& dir) {
  const int tpq = 480, meas = 4 * tpq;
  Track meta;
  meta.meter(0, 4, 2);
  meta.tempo(0, 500000);

  // the horn track is monotonic in time, so running status survives sorting
  Track horn;
  horn.program(0, 0, 60);
  bool status_sent = false;
  for (int m = 0; m < 4; ++m)
    for (int n = 0; n < 8; ++n) {
      const long tick = m * meas + n * (tpq / 2);
      const int pitch = 62 + ((n * 2 + m) % 10);
      if (!status_sent) {
        horn.add(tick, {0x90, static_cast<std::uint8_t>(pitch), 90});
        status_sent = true;
      } else {
        horn.add(tick, {static_cast<std::uint8_t>(pitch), 90});  // running status
      }
      horn.add(tick + tpq / 2 - 30,
               {static_cast<std::uint8_t>(pitch), 0});  // vel 0 = note-off
    }

  Track organ;
  organ.program(0, 1, 19);
  for (int m = 0; m < 4; ++m) {
    organ.on(m * meas, 1, 50 + 2 * m, 85);
    organ.off((m + 1) * meas - 10, 1, 50 + 2 * m);
  }

  save(dir, "05_running.mid",
       file_bytes(1, tpq,
                  {meta.finish(4 * meas), horn.finish(4 * meas), organ.finish(4 * meas)}));
}

// file 6: measures 0 and 1 both duplicate file 1's first measure
void make_dup(const std::string& dir) {
  const int tpq = 480, q = tpq, meas = 4 * tpq;
  Track meta;
  meta.meter(0, 4, 2);
  meta.tempo(0, 600000);

  Track piano;
  piano.program(0, 0, 0);
  Track bass;
  bass.program(0, 1, 33);
  for (int m = 0; m < 2; ++m) {
    const int arp[4] = {60, 64, 67, 72};
    for (int n = 0; n < 4; ++n) {
      piano.on(m * meas + n * q, 0, arp[n], 80 + 4 * n);
      piano.off(m * meas + n * q + q - 40, 0, arp[n]);
    }
    bass.on(m * meas, 1, 36, 96);
    bass.off(m * meas + 2 * q, 1, 36);
    bass.on(m * meas + 2 * q, 1, 43, 96);
    bass.off(m * meas + 4 * q, 1, 43);
  }
  for (int n = 0; n < 4; ++n) {
    piano.on(2 * meas + n * q, 0, 70 - n * 3, 90);
    piano.off(2 * meas + n * q + q / 2, 0, 70 - n * 3);
  }
  bass.on(2 * meas, 1, 34, 96);
  bass.off(3 * meas, 1, 34);

  save(dir, "06_dup.mid",
       file_bytes(1, tpq,
                  {meta.finish(3 * meas), piano.finish(3 * meas), bass.finish(3 * meas)}));
}

// file 7: one lone instrument; every measure discarded for track count
void make_solo(const std::string& dir) {
  const int tpq = 480, meas = 4 * tpq;
  Track meta;
  meta.meter(0, 4, 2);
  meta.tempo(0, 500000);
  Track sax;
  sax.program(0, 0, 65);
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 4; ++n) {
      const int pitch = 60 + ((m * 4 + n) * 2) % 14;
      sax.on(m * meas + n * tpq, 0, pitch, 77);
      sax.off(m * meas + n * tpq + tpq - 20, 0, pitch);
    }
  save(dir, "07_solo.mid", file_bytes(1, tpq, {meta.finish(3 * meas), sax.finish(3 * meas)}));
}

// file 8: a chromatic 16th-note run too dense for the 64-token budget
void make_dense(const std::string& dir) {
  const int tpq = 480, s16 = tpq / 4, meas = 4 * tpq;
  Track meta;
  meta.meter(0, 4, 2);
  meta.tempo(0, 500000);
  Track lead;
  lead.program(0, 0, 80);
  for (int n = 0; n < 16; ++n) {
    lead.on(n * s16, 0, 60 + n, 64 + (n % 8) * 8);
    lead.off(n * s16 + s16 / 2, 0, 60 + n);
    lead.on(n * s16 + s16 / 2, 0, 84 - n, 64 + ((n + 4) % 8) * 8);
    lead.off((n + 1) * s16, 0, 84 - n);
  }
  Track pad;
  pad.program(0, 1, 88);
  pad.on(0, 1, 48, 70);
  pad.off(meas, 1, 48);
  save(dir, "08_dense.mid",
       file_bytes(1, tpq, {meta.finish(meas), lead.finish(meas), pad.finish(meas)}));
}

// file 9: nine simultaneous instruments; discarded for track count > 8
void make_crowd(const std::string& dir) {
  const int tpq = 480, meas = 4 * tpq;
  Track meta;
  meta.meter(0, 4, 2);
  meta.tempo(0, 500000);
  std::vector<Bytes> tracks = {meta.finish(2 * meas)};
  for (int k = 0; k < 9; ++k) {
    Track t;
    const int ch = k;  // channels 0..8, channel 9 stays free for drums
    t.program(0, ch, k * 8);
    for (int m = 0; m < 2; ++m) {
      t.on(m * meas, ch, 48 + 3 * k, 70);
      t.off(m * meas + 2 * tpq, ch, 48 + 3 * k);
    }
    tracks.push_back(t.finish(2 * meas));
  }
  save(dir, "09_crowd.mid", file_bytes(1, tpq, tracks));
}

// file 10: tempo change mid-file, notes held across measure boundaries
void make_tempo(const std::string& dir) {
  const int tpq = 480, meas = 4 * tpq;
  Track meta;
  meta.meter(0, 4, 2);
  meta.tempo(0, 500000);
  meta.tempo(2 * meas, 666667);  // 90 bpm

  Track guitar;
  guitar.program(0, 0, 27);
  for (int m = 0; m < 4; ++m) {
    guitar.on(m * meas + 2 * tpq, 0, 64 + m * 2, 88);
    guitar.off((m + 1) * meas + tpq, 0, 64 + m * 2);  // crosses the barline
  }

  Track cello;
  cello.program(0, 1, 42);
  cello.on(0, 1, 36, 90);
  cello.off(5 * meas, 1, 36);  // held through the whole file
  for (int m = 1; m < 5; ++m) {
    cello.on(m * meas, 1, 48, 72);  // keeps later measures two-instrument
    cello.off(m * meas + tpq, 1, 48);
  }

  save(dir, "10_tempo.mid",
       file_bytes(1, tpq,
                  {meta.finish(5 * meas), guitar.finish(5 * meas), cello.finish(5 * meas)}));
}

// file 11: deliberately corrupt; ingest must count it as skipped
void make_broken(const std::string& dir) {
  save(dir, "11_broken.mid", {'M', 'T', 'h', 'd', 0, 0, 0, 6, 0, 1});
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: make_mini_corpus OUTPUT_DIR\n");
    return 1;
  }
  const std::string dir = argv[1];
  std::filesystem::create_directories(dir);
  make_piano_bass(dir);
  make_band(dir);
  make_meters(dir);
  make_format0(dir);
  make_running(dir);
  make_dup(dir);
  make_solo(dir);
  make_dense(dir);
  make_crowd(dir);
  make_tempo(dir);
  make_broken(dir);
  return 0;
}
