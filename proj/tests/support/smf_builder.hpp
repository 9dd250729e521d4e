#pragma once

// Minimal SMF byte assembler for tests. Events must be appended in tick
// order; delta times are encoded from the running position.

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace midispace::testing {

inline void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void append_vlq(std::vector<std::uint8_t>& out, long value) {
  std::uint8_t stack[5];
  int n = 0;
  do {
    stack[n++] = static_cast<std::uint8_t>(value & 0x7f);
    value >>= 7;
  } while (value > 0);
  while (n > 1) out.push_back(static_cast<std::uint8_t>(stack[--n] | 0x80));
  out.push_back(stack[0]);
}

class TrackBytes {
 public:
  /// Appends raw event bytes at an absolute tick (monotone non-decreasing).
  void at(long tick, std::initializer_list<int> bytes) {
    append_vlq(data_, tick - last_);
    last_ = tick;
    for (int b : bytes) data_.push_back(static_cast<std::uint8_t>(b));
  }

  void note_on(long tick, int ch, int pitch, int vel) { at(tick, {0x90 | ch, pitch, vel}); }
  void note_off(long tick, int ch, int pitch) { at(tick, {0x80 | ch, pitch, 64}); }
  void program(long tick, int ch, int prog) { at(tick, {0xC0 | ch, prog}); }
  void tempo(long tick, long us_per_quarter) {
    at(tick, {0xFF, 0x51, 0x03, static_cast<int>((us_per_quarter >> 16) & 0xff),
              static_cast<int>((us_per_quarter >> 8) & 0xff),
              static_cast<int>(us_per_quarter & 0xff)});
  }
  void meter(long tick, int num, int denom_pow2) {
    at(tick, {0xFF, 0x58, 0x04, num, denom_pow2, 24, 8});
  }

  std::vector<std::uint8_t> finish(long end_tick) {
    at(end_tick, {0xFF, 0x2F, 0x00});
    std::vector<std::uint8_t> chunk = {'M', 'T', 'r', 'k'};
    append_u32(chunk, static_cast<std::uint32_t>(data_.size()));
    chunk.insert(chunk.end(), data_.begin(), data_.end());
    return chunk;
  }

 private:
  std::vector<std::uint8_t> data_;
  long last_ = 0;
};

inline std::vector<std::uint8_t> smf_file(int format, int tpq,
                                          const std::vector<std::vector<std::uint8_t>>& tracks) {
  std::vector<std::uint8_t> out = {'M', 'T', 'h', 'd'};
  append_u32(out, 6);
  out.push_back(0);
  out.push_back(static_cast<std::uint8_t>(format));
  out.push_back(static_cast<std::uint8_t>(tracks.size() >> 8));
  out.push_back(static_cast<std::uint8_t>(tracks.size() & 0xff));
  out.push_back(static_cast<std::uint8_t>(tpq >> 8));
  out.push_back(static_cast<std::uint8_t>(tpq & 0xff));
  for (const auto& t : tracks) out.insert(out.end(), t.begin(), t.end());
  return out;
}

}  // namespace midispace::testing
