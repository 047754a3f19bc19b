#pragma once

#include <optional>
#include <string>
#include <vector>

#include "inferalign/backends/interfaces.hpp"
#include "inferalign/rewards/caption.hpp"

namespace inferalign::backends {

struct ToyGeneratorOptions {
  double off_key_rate = 0.15;  // epsilon
  double tempo_perturb_probability = 0.3;
  int tempo_perturb_range = 10;  // bpm, either direction
  double default_density = 2.0;  // notes per beat
  int default_tempo = 120;
  int ppq = midi::kDefaultPpq;
  // Emit EOS once the sequence reaches this many tokens. Unset: never.
  std::optional<int> eos_at_length;
};

/// Offline stand-in for a text-to-MIDI model.
///
/// The token grammar is Tempo, then repeated (NoteOn, Duration, TimeShift)
/// groups. The tempo is the caption's (120 if unset), nudged by up to +-10 bpm
/// with probability 0.3. Pitches come from the caption key's scale (C major if
/// unset) over octaves 3-6 with probability 1 - epsilon and from the off-key
/// pitch classes over the same range otherwise. Durations are drawn from
/// {eighth, quarter, half}; time shifts realize the caption density. The random
/// stream depends only on (seed, prefix length).
std::vector<midi::Token> toy_generate(const rewards::CaptionAttributes& attrs,
                                      std::span<const midi::Token> prefix, int n_tokens,
                                      std::uint64_t seed, const ToyGeneratorOptions& options = {});

class ToyGenerator final : public Generator {
 public:
  explicit ToyGenerator(ToyGeneratorOptions options = {}) : options_(options) {}
  std::vector<midi::Token> generate(const GeneratorRequest& request) override;
  const ToyGeneratorOptions& options() const { return options_; }

 private:
  ToyGeneratorOptions options_;
};

/// Seeded caption paraphraser. Each variation combines synonym substitution
/// from a fixed lexicon, sentence reordering, and adding or removing one
/// descriptor sentence. Key, tempo and density never change.
std::vector<std::string> rule_mutate(std::string_view caption, int count, std::uint64_t seed);

class RuleMutator final : public Mutator {
 public:
  std::vector<std::string> mutate(const MutationRequest& request) override;
};

class MockScorer final : public Scorer {
 public:
  double score(std::span<const std::uint8_t> smf, std::string_view caption) override;
};

}  // namespace inferalign::backends
