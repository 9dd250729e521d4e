#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace midispace {

/// Malformed external input (MIDI bytes, dataset lines, checkpoint files).
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string message, std::size_t byte_offset)
      : std::runtime_error(message + " (at byte " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}
  explicit ParseError(std::string message)
      : std::runtime_error(std::move(message)), offset_(0) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Well-formed input that violates a domain contract (ranges, shapes, counts).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad or inconsistent configuration (unknown keys, invalid values).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace midispace
