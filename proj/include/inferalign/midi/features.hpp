#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <string>

#include "inferalign/midi/notes.hpp"
#include "inferalign/midi/smf.hpp"

namespace inferalign::midi {

enum class Mode { Major, Minor };

struct Key {
  int tonic = 0;  // pitch class, 0 = C
  Mode mode = Mode::Major;

  friend bool operator==(const Key&, const Key&) = default;
};

/// "C major", "F# minor", ...
std::string to_string(const Key& key);

/// Relative major/minor partner: A minor <-> C major.
Key relative_key(const Key& key);

/// Pitch classes of the major or natural-minor scale on the key's tonic.
std::array<bool, 12> diatonic_set(const Key& key);

using PitchClassHistogram = std::array<double, 12>;

/// Duration-weighted pitch-class mass.
PitchClassHistogram pitch_class_histogram(std::span<const NoteEvent> notes);

/// Krumhansl-Kessler probe-tone profiles, C-rooted.
inline constexpr std::array<double, 12> kMajorProfile = {6.35, 2.23, 3.48, 2.33, 4.38, 4.09,
                                                         2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
inline constexpr std::array<double, 12> kMinorProfile = {6.33, 2.68, 3.52, 5.38, 2.60, 3.53,
                                                         2.54, 4.75, 3.98, 2.69, 3.34, 3.17};

/// Pearson correlation of the histogram against the profile rotated to `key`.
double key_correlation(const PitchClassHistogram& histogram, const Key& key);

struct FeatureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Krumhansl-Schmuckler estimate: argmax of key_correlation over all 24 keys,
/// scanning tonic 0..11 with major before minor so earlier keys win ties.
/// Throws FeatureError("no notes") on empty input.
Key estimate_key(std::span<const NoteEvent> notes);

/// Tempo of a parsed file: its first tempo event, else the median
/// inter-onset interval read at the MIDI default of 500000 us per quarter.
/// Throws FeatureError when neither is available.
double extract_tempo(const ParsedSmf& smf);
double extract_tempo(std::span<const NoteEvent> notes, int ppq);

}  // namespace inferalign::midi
