#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "inferalign/backends/interfaces.hpp"
#include "inferalign/midi/features.hpp"
#include "inferalign/midi/notes.hpp"
#include "inferalign/rewards/caption.hpp"

namespace inferalign::rewards {

inline constexpr double kDefaultAlpha = 1.0;
inline constexpr double kDefaultBeta = 5.0;

struct RewardBreakdown {
  double ra = 0.0;         // text/audio consistency
  double rh = 0.0;         // harmonic consistency, [0, 1]
  double composite = 0.0;  // alpha * ra + beta * rh
  double alpha = kDefaultAlpha;
  double beta = kDefaultBeta;

  friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

/// Number of notes whose pitch class is outside the key's diatonic set.
std::size_t count_off_key(std::span<const midi::NoteEvent> notes, const midi::Key& key);

/// 1 - off-key / total. An empty note list scores 0 so silence is never optimal.
double harmonic_consistency(std::span<const midi::NoteEvent> notes, const midi::Key& key);

/// Key that governs harmonic consistency: the caption's key when it names one,
/// otherwise the key estimated from the notes. Throws midi::FeatureError when
/// neither is available.
midi::Key resolve_reward_key(const CaptionAttributes& caption, std::span<const midi::NoteEvent> notes);

double composite_reward(double ra, double rh, double alpha = kDefaultAlpha, double beta = kDefaultBeta);

RewardBreakdown make_breakdown(double ra, double rh, double alpha, double beta);

/// Decodes the tokens, renders them as an SMF at their own tempo (120 bpm when
/// no Tempo token is present) and asks the scorer for its similarity to the
/// caption. Results are clamped to [-1, 1].
double text_audio_consistency(std::span<const midi::Token> tokens, std::string_view caption,
                              backends::Scorer& scorer, int ppq = midi::kDefaultPpq);

/// Deterministic offline stand-in for an embedding-similarity scorer.
///
/// Each attribute present in the caption contributes a term in [0, 1]:
///   key      1 on exact match with the estimated key, 0.5 for the relative
///            major/minor, else 0                                (weight 0.5)
///   tempo    max(0, 1 - |bpm - caption bpm| / 60)               (weight 0.3)
///   density  max(0, 1 - |d - caption d| / caption d)            (weight 0.2)
/// The score is the weighted mean over present attributes; 0.5 when the
/// caption has none. Unparseable SMF bytes score 0.
double mock_score(std::span<const std::uint8_t> smf, std::string_view caption);

/// Notes per beat over the onset span: (n - 1) / span. Zero when fewer than
/// two distinct onsets.
double note_density(std::span<const midi::NoteEvent> notes, int ppq);

}  // namespace inferalign::rewards
