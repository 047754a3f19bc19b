#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "inferalign/backends/builtin.hpp"
#include "inferalign/backends/seed.hpp"
#include "inferalign/midi/features.hpp"
#include "inferalign/rewards/caption.hpp"
#include "oracles.hpp"

using namespace inferalign;
using midi::Token;
using midi::TokenKind;

TEST_CASE("derived seeds are deterministic and path-sensitive") {
  static_assert(backends::derive_seed(1, {2, 3}) == backends::derive_seed(1, {2, 3}));
  CHECK(backends::derive_seed(1, {2, 3}) != backends::derive_seed(1, {3, 2}));
  CHECK(backends::derive_seed(1, {2}) != backends::derive_seed(2, {2}));
  CHECK(backends::derive_seed(1, {}) != backends::derive_seed(1, {0}));

  backends::Rng rng(5);
  std::array<int, 6> counts{};
  for (int i = 0; i < 60000; ++i) {
    const auto v = rng.below(6);
    REQUIRE(v < 6);
    ++counts[v];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.between(-3, 3);
    CHECK(v >= -3);
    CHECK(v <= 3);
    const double u = rng.unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("toy generator is deterministic and follows its grammar") {
  backends::ToyGenerator gen;
  const backends::GeneratorRequest req{"A calm piece in C major", {}, 301, 99};
  const auto a = gen.generate(req);
  const auto b = gen.generate(req);
  CHECK(a == b);
  REQUIRE(a.size() == 301);
  CHECK(a[0].kind == TokenKind::Tempo);
  for (std::size_t i = 1; i < a.size(); ++i) {
    const auto expected = std::array{TokenKind::NoteOn, TokenKind::Duration, TokenKind::TimeShift}[(i - 1) % 3];
    CHECK(a[i].kind == expected);
    CHECK(a[i].valid());
  }
  auto other = req;
  other.seed = 100;
  CHECK(gen.generate(other) != a);
}

TEST_CASE("toy generator stream depends only on seed and prefix length") {
  const auto attrs = rewards::parse_caption("in D minor at 90 bpm");
  const auto whole = backends::toy_generate(attrs, {}, 40, 7);
  const std::vector<Token> prefix(whole.begin(), whole.begin() + 10);
  const auto rest = backends::toy_generate(attrs, prefix, 30, 7);
  // Same seed and prefix length: the continuation is a fixed function of both.
  CHECK(rest == backends::toy_generate(attrs, prefix, 30, 7));
  std::vector<Token> other_prefix = prefix;
  other_prefix[3] = Token::note_on(50);
  CHECK(backends::toy_generate(attrs, other_prefix, 30, 7) == rest);
  CHECK(backends::toy_generate(attrs, prefix, 30, 8) != rest);
}

TEST_CASE("toy generator length contract and EOS") {
  const rewards::CaptionAttributes attrs;
  for (int n : {1, 2, 7, 50}) CHECK(backends::toy_generate(attrs, {}, n, 1).size() == static_cast<std::size_t>(n));

  backends::ToyGeneratorOptions opts;
  opts.eos_at_length = 10;
  const auto out = backends::toy_generate(attrs, {}, 50, 1, opts);
  REQUIRE(out.size() == 11);
  CHECK(out.back() == Token::eos());
  CHECK(backends::toy_generate(attrs, out, 5, 1, opts).empty());
  CHECK(midi::well_formed(out));
}

TEST_CASE("toy generator honors the caption tempo") {
  backends::ToyGeneratorOptions opts;
  opts.tempo_perturb_probability = 0.0;
  const auto out = backends::toy_generate(rewards::parse_caption("Presto"), {}, 1, 3, opts);
  CHECK(out[0] == Token::tempo(180));
  std::set<int> tempos;
  for (std::uint64_t s = 0; s < 300; ++s) {
    const int bpm = backends::toy_generate(rewards::parse_caption("at 100 bpm"), {}, 1, s)[0].value;
    CHECK(bpm >= 90);
    CHECK(bpm <= 110);
    tempos.insert(bpm);
  }
  CHECK(tempos.count(100));
  CHECK(tempos.size() > 5);
}

TEST_CASE("epsilon = 0 keeps every pitch in key") {
  backends::ToyGeneratorOptions opts;
  opts.off_key_rate = 0.0;
  for (const char* caption : {"in C major", "in G minor", "in F# major", "in Eb minor"}) {
    const auto attrs = rewards::parse_caption(caption);
    const auto notes = midi::tokens_to_notes(backends::toy_generate(attrs, {}, 3001, 11, opts));
    REQUIRE(notes.size() == 1000);
    CHECK(oracle::off_key_count(notes, *attrs.key) == 0);
    for (const auto& n : notes) {
      CHECK(n.pitch >= 48);
      CHECK(n.pitch <= 95);
    }
  }
}

TEST_CASE("epsilon = 0.15 gives an off-key fraction within 0.15 +- 0.02 over 10,000 notes") {
  const auto attrs = rewards::parse_caption("in A minor");
  const auto notes = midi::tokens_to_notes(backends::toy_generate(attrs, {}, 1 + 3 * 10'000, 2024));
  REQUIRE(notes.size() == 10'000);
  const double fraction = static_cast<double>(oracle::off_key_count(notes, *attrs.key)) / 10'000.0;
  CHECK(fraction >= 0.13);
  CHECK(fraction <= 0.17);
}

TEST_CASE("rule mutator preserves hard attributes, is distinct and deterministic") {
  const std::string caption =
      "A melodic electronic song with ambient elements. Set in G minor with a 4/4 time signature, it moves at a "
      "lively Presto tempo.";
  const auto original = rewards::parse_caption(caption);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto out = backends::rule_mutate(caption, 5, seed);
    REQUIRE(out.size() == 5);
    CHECK(out == backends::rule_mutate(caption, 5, seed));
    std::set<std::string> unique(out.begin(), out.end());
    CHECK(unique.size() == 5);
    CHECK_FALSE(unique.count(caption));
    for (const auto& m : out) {
      const auto attrs = rewards::parse_caption(m);
      CHECK(attrs.key == midi::Key{7, midi::Mode::Minor});
      CHECK(attrs.tempo_bpm == 180);
      CHECK(rewards::same_hard_attributes(attrs, original));
    }
  }
  const auto one = backends::rule_mutate("A gentle waltz in D major", 1, 3);
  REQUIRE(one.size() == 1);
  CHECK(one[0] != "A gentle waltz in D major");

  // Attribute-free and empty captions still yield distinct variations.
  for (const char* c : {"", "Upbeat acoustic guitar tune with a warm and cheerful feel"}) {
    const auto out = backends::rule_mutate(c, 12, 1);
    CHECK(std::set<std::string>(out.begin(), out.end()).size() == 12);
    for (const auto& m : out) CHECK(rewards::same_hard_attributes(rewards::parse_caption(m), rewards::parse_caption(c)));
  }
}

TEST_CASE("rule mutator keeps attributes across many captions") {
  const char* captions[] = {"A slow Adagio ballad in Bb major with sparse piano",
                            "Energetic rock at 150 bpm in E minor, busy drums and bright guitars",
                            "A dark cinematic piece in C# minor, Moderato, with 3 notes per beat",
                            "Cheerful pop tune in F major at 120 bpm",
                            "An ambient soundscape"};
  for (const char* c : captions) {
    const auto base = rewards::parse_caption(c);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      for (const auto& m : backends::rule_mutate(c, 7, seed)) {
        CHECK(rewards::same_hard_attributes(rewards::parse_caption(m), base));
        CHECK(m != c);
      }
    }
  }
}
