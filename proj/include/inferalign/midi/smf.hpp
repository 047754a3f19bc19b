#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "inferalign/midi/notes.hpp"

namespace inferalign::midi {

using Bytes = std::vector<std::uint8_t>;

class SmfParseError : public std::runtime_error {
 public:
  SmfParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string message_;
  std::size_t offset_;
};

struct EncodedSmf {
  Bytes bytes;
  // Notes shortened (or dropped) because a same-pitch note started before they ended.
  std::size_t truncated_notes = 0;
};

/// Writes a format-0, single-track Standard MIDI File: a tempo meta event at
/// tick 0, note on/off pairs on channel 0 and an end-of-track meta event.
/// Output is byte-exact for a given input; unsorted input is sorted first.
EncodedSmf notes_to_smf(std::span<const NoteEvent> notes, int ppq = kDefaultPpq,
                        double bpm = 120.0);

struct ParsedSmf {
  Notes notes;  // sorted, see sort_notes
  int ppq = kDefaultPpq;
  int format = 0;
  // Tempo of the earliest FF 51 event across all tracks.
  std::optional<std::uint32_t> micros_per_quarter;

  std::optional<double> bpm() const;
};

/// Tolerant reader for formats 0 and 1. Tracks are flattened, running status
/// and sysex are handled, a note-on with velocity 0 counts as note-off and
/// notes left sounding at end of track are closed there.
ParsedSmf parse_smf(std::span<const std::uint8_t> bytes);

std::uint32_t bpm_to_micros(double bpm);

/// Variable-length quantity helpers, exposed for tests.
void write_vlq(Bytes& out, std::uint32_t value);
std::uint32_t read_vlq(std::span<const std::uint8_t> bytes, std::size_t& pos);

Bytes read_file(const std::string& path);
void write_file(const std::string& path, std::span<const std::uint8_t> bytes);

}  // namespace inferalign::midi
