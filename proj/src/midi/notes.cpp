#include "inferalign/midi/notes.hpp"

#include <algorithm>
#include <optional>

namespace inferalign::midi {

Notes tokens_to_notes(std::span<const Token> tokens, int ppq) {
  Notes notes;
  if (ppq <= 0) return notes;

  const std::int64_t bar_ticks = 4LL * ppq;
  std::int64_t cursor = 0;
  std::optional<int> pending;  // pitch of a NoteOn still waiting for its Duration

  auto flush = [&](std::int64_t duration) {
    notes.push_back({cursor, std::max<std::int64_t>(1, duration), *pending, kDefaultVelocity});
    pending.reset();
  };

  for (const auto& token : tokens) {
    if (token.kind == TokenKind::Eos) break;
    if (!token.valid()) continue;

    if (token.kind == TokenKind::Duration) {
      if (pending) flush(bin_ticks(token.value, ppq));
      continue;
    }
    if (pending) flush(ppq);

    switch (token.kind) {
      case TokenKind::NoteOn: pending = token.value; break;
      case TokenKind::TimeShift: cursor += bin_ticks(token.value, ppq); break;
      case TokenKind::Bar: cursor = (cursor / bar_ticks + 1) * bar_ticks; break;
      default: break;
    }
  }
  if (pending) flush(ppq);
  return notes;
}

void sort_notes(Notes& notes) { std::sort(notes.begin(), notes.end()); }

Notes transpose(std::span<const NoteEvent> notes, int semitones) {
  Notes out(notes.begin(), notes.end());
  for (auto& n : out) n.pitch = std::clamp(n.pitch + semitones, 0, 127);
  return out;
}

}  // namespace inferalign::midi
