#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "inferalign/midi/token.hpp"

namespace inferalign::midi {

inline constexpr int kDefaultVelocity = 96;

struct NoteEvent {
  std::int64_t onset = 0;     // ticks, >= 0
  std::int64_t duration = 1;  // ticks, >= 1
  int pitch = 60;
  int velocity = kDefaultVelocity;

  friend auto operator<=>(const NoteEvent&, const NoteEvent&) = default;
};

using Notes = std::vector<NoteEvent>;

/// Decodes a token stream into notes. Never fails: a cursor advances on
/// TimeShift and jumps to the next 4/4 bar line on Bar; NoteOn followed by a
/// Duration yields a note of that length, an unpaired NoteOn gets a quarter
/// note; stray Duration tokens and anything after EOS are ignored.
Notes tokens_to_notes(std::span<const Token> tokens, int ppq = kDefaultPpq);

/// Sorts by (onset, pitch, duration, velocity).
void sort_notes(Notes& notes);

Notes transpose(std::span<const NoteEvent> notes, int semitones);

}  // namespace inferalign::midi
