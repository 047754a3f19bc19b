#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "inferalign/midi/features.hpp"

namespace inferalign::rewards {

/// Structured view of a caption. Unset fields were not found in the text.
struct CaptionAttributes {
  std::optional<midi::Key> key;
  std::optional<int> tempo_bpm;
  std::optional<double> density;  // notes per beat
  std::string raw_text;

  bool empty() const { return !key && !tempo_bpm && !density; }
};

/// Extracts key ("G minor", "C# major", "Bb minor"), tempo (explicit "N bpm"
/// wins over a tempo word) and density keywords. Never fails.
///
/// Tempo words: Largo 50, Adagio 70, Andante 90, Moderato 110, Allegro 140,
/// Presto 180. Density words (notes per beat): sparse 1, busy 3, dense 4, or
/// an explicit "N notes per beat".
CaptionAttributes parse_caption(std::string_view text);

/// True when both captions parse to the same key, tempo and density.
bool same_hard_attributes(const CaptionAttributes& a, const CaptionAttributes& b);

}  // namespace inferalign::rewards
