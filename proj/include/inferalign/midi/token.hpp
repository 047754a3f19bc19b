#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace inferalign::midi {

inline constexpr int kDefaultPpq = 480;
inline constexpr int kNumBins = 32;
inline constexpr int kMinBpm = 20;
inline constexpr int kMaxBpm = 300;

enum class TokenKind : std::uint8_t { NoteOn, Duration, TimeShift, Tempo, Bar, Eos };

// One generated symbol. `value` carries the pitch, bin index or bpm depending on
// kind and is zero for Bar/Eos.
struct Token {
  TokenKind kind = TokenKind::Eos;
  int value = 0;

  static Token note_on(int pitch) { return {TokenKind::NoteOn, pitch}; }
  static Token duration(int bin) { return {TokenKind::Duration, bin}; }
  static Token time_shift(int bin) { return {TokenKind::TimeShift, bin}; }
  static Token tempo(int bpm) { return {TokenKind::Tempo, bpm}; }
  static Token bar() { return {TokenKind::Bar, 0}; }
  static Token eos() { return {TokenKind::Eos, 0}; }

  bool valid() const;

  friend bool operator==(const Token&, const Token&) = default;
};

/// Text form used on the wire and in reports: "NoteOn:60", "Duration:13",
/// "TimeShift:9", "Tempo:120", "Bar", "EOS".
std::string to_string(const Token& token);
/// Inverse of to_string. Returns nullopt for unknown or out-of-range text.
std::optional<Token> token_from_string(std::string_view text);

/// Tick length of a duration/time-shift bin at the given resolution.
///
/// The 32 bins are geometrically spaced from a 1/32 note (ppq/8) to four whole
/// notes (16 * ppq). The eight power-of-two note values in that range are
/// snapped onto their nearest bin so that eighths, quarters and halves are
/// represented exactly.
int bin_ticks(int bin, int ppq = kDefaultPpq);
/// Bin whose tick length is closest to `ticks` (ties go to the shorter bin).
int nearest_bin(int ticks, int ppq = kDefaultPpq);

/// Bins holding the exact common note values.
inline constexpr int kEighthBin = 9;
inline constexpr int kQuarterBin = 13;
inline constexpr int kHalfBin = 18;

/// True when the sequence has no tokens after an EOS and every token is in range.
bool well_formed(std::span<const Token> tokens);

/// First Tempo token before EOS, if any.
std::optional<int> first_tempo(std::span<const Token> tokens);

}  // namespace inferalign::midi
