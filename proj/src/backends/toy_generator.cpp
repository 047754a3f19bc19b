#include <algorithm>

#include "inferalign/backends/builtin.hpp"
#include "inferalign/backends/seed.hpp"
#include "inferalign/midi/features.hpp"

namespace inferalign::backends {

namespace {

constexpr int kLowPitch = 48;   // C3
constexpr int kHighPitch = 95;  // B6

struct PitchPools {
  std::vector<int> in_key;
  std::vector<int> off_key;
};

PitchPools pools_for(const midi::Key& key) {
  PitchPools pools;
  const auto in = midi::diatonic_set(key);
  for (int p = kLowPitch; p <= kHighPitch; ++p) (in[p % 12] ? pools.in_key : pools.off_key).push_back(p);
  return pools;
}

}  // namespace

std::vector<midi::Token> toy_generate(const rewards::CaptionAttributes& attrs,
                                      std::span<const midi::Token> prefix, int n_tokens,
                                      std::uint64_t seed, const ToyGeneratorOptions& options) {
  using midi::Token;
  using midi::TokenKind;

  std::vector<Token> out;
  if (n_tokens <= 0) return out;
  if (std::any_of(prefix.begin(), prefix.end(), [](const Token& t) { return t.kind == TokenKind::Eos; })) {
    return out;
  }

  const midi::Key key = attrs.key.value_or(midi::Key{0, midi::Mode::Major});
  const double density = attrs.density.value_or(options.default_density);
  const int base_tempo = attrs.tempo_bpm.value_or(options.default_tempo);
  const int shift_bin = midi::nearest_bin(static_cast<int>(options.ppq / density), options.ppq);
  const auto pools = pools_for(key);
  constexpr int kDurationBins[3] = {midi::kEighthBin, midi::kQuarterBin, midi::kHalfBin};

  Rng rng(derive_seed(seed, {prefix.size()}));
  out.reserve(static_cast<std::size_t>(n_tokens));

  while (static_cast<int>(out.size()) < n_tokens) {
    const std::size_t length = prefix.size() + out.size();
    if (options.eos_at_length && static_cast<int>(length) >= *options.eos_at_length) {
      out.push_back(Token::eos());
      break;
    }
    const Token* last = !out.empty() ? &out.back() : (!prefix.empty() ? &prefix.back() : nullptr);

    if (last == nullptr) {
      int bpm = base_tempo;
      if (rng.chance(options.tempo_perturb_probability)) {
        bpm += static_cast<int>(rng.between(-options.tempo_perturb_range, options.tempo_perturb_range));
      }
      out.push_back(Token::tempo(std::clamp(bpm, midi::kMinBpm, midi::kMaxBpm)));
    } else if (last->kind == TokenKind::NoteOn) {
      out.push_back(Token::duration(kDurationBins[rng.below(3)]));
    } else if (last->kind == TokenKind::Duration) {
      out.push_back(Token::time_shift(shift_bin));
    } else {
      const bool off = !pools.off_key.empty() && rng.chance(options.off_key_rate);
      const auto& pool = off ? pools.off_key : pools.in_key;
      out.push_back(Token::note_on(pool[rng.below(pool.size())]));
    }
  }
  return out;
}

std::vector<midi::Token> ToyGenerator::generate(const GeneratorRequest& request) {
  return toy_generate(rewards::parse_caption(request.caption), request.prefix, request.n_tokens, request.seed,
                      options_);
}

}  // namespace inferalign::backends
