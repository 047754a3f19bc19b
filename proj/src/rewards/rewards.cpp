#include "inferalign/rewards/rewards.hpp"

#include <algorithm>
#include <cmath>

#include "inferalign/midi/smf.hpp"

namespace inferalign::rewards {

std::size_t count_off_key(std::span<const midi::NoteEvent> notes, const midi::Key& key) {
  const auto in_key = midi::diatonic_set(key);
  return static_cast<std::size_t>(
      std::count_if(notes.begin(), notes.end(), [&](const midi::NoteEvent& n) { return !in_key[n.pitch % 12]; }));
}

double harmonic_consistency(std::span<const midi::NoteEvent> notes, const midi::Key& key) {
  if (notes.empty()) return 0.0;
  return 1.0 - static_cast<double>(count_off_key(notes, key)) / static_cast<double>(notes.size());
}

midi::Key resolve_reward_key(const CaptionAttributes& caption, std::span<const midi::NoteEvent> notes) {
  if (caption.key) return *caption.key;
  return midi::estimate_key(notes);
}

double composite_reward(double ra, double rh, double alpha, double beta) { return alpha * ra + beta * rh; }

RewardBreakdown make_breakdown(double ra, double rh, double alpha, double beta) {
  return {ra, rh, composite_reward(ra, rh, alpha, beta), alpha, beta};
}

double text_audio_consistency(std::span<const midi::Token> tokens, std::string_view caption,
                              backends::Scorer& scorer, int ppq) {
  const auto notes = midi::tokens_to_notes(tokens, ppq);
  const double bpm = midi::first_tempo(tokens).value_or(120);
  const auto smf = midi::notes_to_smf(notes, ppq, bpm);
  return std::clamp(scorer.score(smf.bytes, caption), -1.0, 1.0);
}

double note_density(std::span<const midi::NoteEvent> notes, int ppq) {
  if (notes.size() < 2 || ppq <= 0) return 0.0;
  std::int64_t first = notes.front().onset;
  std::int64_t last = first;
  for (const auto& n : notes) {
    first = std::min(first, n.onset);
    last = std::max(last, n.onset);
  }
  if (last == first) return 0.0;
  const double beats = static_cast<double>(last - first) / ppq;
  return static_cast<double>(notes.size() - 1) / beats;
}

double mock_score(std::span<const std::uint8_t> smf, std::string_view caption) {
  const auto attrs = parse_caption(caption);
  if (attrs.empty()) return 0.5;

  midi::ParsedSmf parsed;
  try {
    parsed = midi::parse_smf(smf);
  } catch (const midi::SmfParseError&) {
    return 0.0;
  }

  double weighted = 0.0;
  double weights = 0.0;
  if (attrs.key) {
    double term = 0.0;
    if (!parsed.notes.empty()) {
      const auto estimated = midi::estimate_key(parsed.notes);
      if (estimated == *attrs.key) term = 1.0;
      else if (estimated == midi::relative_key(*attrs.key)) term = 0.5;
    }
    weighted += 0.5 * term;
    weights += 0.5;
  }
  if (attrs.tempo_bpm) {
    double term = 0.0;
    try {
      const double bpm = midi::extract_tempo(parsed);
      term = std::max(0.0, 1.0 - std::abs(bpm - *attrs.tempo_bpm) / 60.0);
    } catch (const midi::FeatureError&) {
    }
    weighted += 0.3 * term;
    weights += 0.3;
  }
  if (attrs.density) {
    const double d = note_density(parsed.notes, parsed.ppq);
    weighted += 0.2 * std::max(0.0, 1.0 - std::abs(d - *attrs.density) / *attrs.density);
    weights += 0.2;
  }
  return weighted / weights;
}

}  // namespace inferalign::rewards
