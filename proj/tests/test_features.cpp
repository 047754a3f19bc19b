#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <numeric>
#include <random>

#include "inferalign/midi/features.hpp"
#include "inferalign/midi/smf.hpp"
#include "oracles.hpp"

using namespace inferalign::midi;

namespace {

// Ascending one-octave scale, upper tonic included: without it a natural minor
// scale has exactly the pitch-class content of its relative major.
Notes scale(int tonic, Mode mode, int octave_base = 60) {
  const std::array<int, 8> major = {0, 2, 4, 5, 7, 9, 11, 12};
  const std::array<int, 8> minor = {0, 2, 3, 5, 7, 8, 10, 12};
  Notes notes;
  for (int i = 0; i < 8; ++i) {
    const int offset = (mode == Mode::Major ? major : minor)[i];
    notes.push_back({i * 480LL, 480, octave_base + tonic + offset, 96});
  }
  return notes;
}

Notes random_corpus(std::mt19937_64& rng) {
  Notes notes;
  const int n = 1 + static_cast<int>(rng() % 40);
  for (int i = 0; i < n; ++i) {
    notes.push_back({i * 120LL, 1 + static_cast<std::int64_t>(rng() % 960), 36 + static_cast<int>(rng() % 60), 96});
  }
  return notes;
}

}  // namespace

TEST_CASE("pitch-class histogram") {
  CHECK(pitch_class_histogram({}) == PitchClassHistogram{});

  const Notes c4 = {{0, 300, 60, 96}};
  auto h = pitch_class_histogram(c4);
  CHECK(h[0] == 300);
  CHECK(std::accumulate(h.begin(), h.end(), 0.0) == 300);

  const Notes triad = {{0, 480, 60, 96}, {0, 480, 64, 96}, {0, 480, 67, 96}};
  h = pitch_class_histogram(triad);
  for (int pc = 0; pc < 12; ++pc) CHECK(h[pc] == (pc == 0 || pc == 4 || pc == 7 ? 480 : 0));
}

TEST_CASE("histogram mass equals total duration") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto notes = random_corpus(rng);
    const auto h = pitch_class_histogram(notes);
    double total = 0;
    for (const auto& n : notes) total += static_cast<double>(n.duration);
    CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(total));
    for (double w : h) CHECK(w >= 0);
  }
}

TEST_CASE("key examples") {
  CHECK(estimate_key(scale(0, Mode::Major)) == Key{0, Mode::Major});
  CHECK(estimate_key(transpose(scale(0, Mode::Major), 2)) == Key{2, Mode::Major});
  CHECK(estimate_key(scale(9, Mode::Minor)) == Key{9, Mode::Minor});
  CHECK_THROWS_AS(estimate_key({}), FeatureError);
  try {
    estimate_key({});
  } catch (const FeatureError& e) {
    CHECK(std::string(e.what()) == "no notes");
  }
}

TEST_CASE("key correlation matches the brute-force oracle for all 24 keys") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const auto notes = random_corpus(rng);
    const auto scores = oracle::ks_scores(notes);
    const auto h = pitch_class_histogram(notes);
    for (const auto& s : scores) CHECK(key_correlation(h, s.key) == doctest::Approx(s.r).epsilon(1e-12));
    CHECK(estimate_key(notes) == oracle::ks_key(notes));
  }
}

TEST_CASE("24 synthetic scale corpora agree with the oracle") {
  int agree = 0;
  for (int tonic = 0; tonic < 12; ++tonic) {
    for (Mode mode : {Mode::Major, Mode::Minor}) {
      const auto notes = scale(tonic, mode);
      const auto estimated = estimate_key(notes);
      CHECK(estimated == oracle::ks_key(notes));
      agree += estimated == Key{tonic, mode};
    }
  }
  CHECK(agree == 24);
}

TEST_CASE("transposition equivariance on 200 random corpora") {
  std::mt19937_64 rng(77);
  int checked = 0;
  while (checked < 200) {
    const auto notes = random_corpus(rng);
    if (!oracle::ks_unique(notes)) continue;
    const int t = static_cast<int>(rng() % 12);
    const auto base = estimate_key(notes);
    const auto moved = estimate_key(transpose(notes, t));
    CHECK(moved.tonic == (base.tonic + t) % 12);
    CHECK(moved.mode == base.mode);
    ++checked;
  }
}

TEST_CASE("relative keys and diatonic sets") {
  CHECK(relative_key(Key{0, Mode::Major}) == Key{9, Mode::Minor});
  CHECK(relative_key(Key{9, Mode::Minor}) == Key{0, Mode::Major});
  for (int tonic = 0; tonic < 12; ++tonic) {
    for (Mode mode : {Mode::Major, Mode::Minor}) {
      const Key k{tonic, mode};
      CHECK(relative_key(relative_key(k)) == k);
      const auto set = diatonic_set(k);
      const auto expected = oracle::scale_classes(k);
      for (int pc = 0; pc < 12; ++pc) CHECK(set[pc] == static_cast<bool>(expected.count(pc)));
      CHECK(diatonic_set(relative_key(k)) == set);
    }
  }
  CHECK(to_string(Key{7, Mode::Minor}) == "G minor");
}

TEST_CASE("tempo extraction") {
  const Notes notes = {{0, 100, 60, 96}, {480, 100, 62, 96}, {960, 100, 64, 96}};
  CHECK(extract_tempo(parse_smf(notes_to_smf(notes, 480, 120.0).bytes)) == doctest::Approx(120.0));

  // No tempo event, onsets every ppq ticks: 0.5 s beats, 120 bpm.
  const auto fixture = read_file((std::filesystem::path(INFERALIGN_FIXTURES) / "no_tempo.mid").string());
  const auto parsed = parse_smf(fixture);
  CHECK_FALSE(parsed.micros_per_quarter);
  CHECK(extract_tempo(parsed) == doctest::Approx(120.0));
  // Onsets every eighth: twice as many beats per minute.
  const Notes eighths = {{0, 10, 60, 96}, {240, 10, 60, 96}, {480, 10, 60, 96}, {720, 10, 60, 96}};
  CHECK(extract_tempo(eighths, 480) == doctest::Approx(240.0));

  CHECK_THROWS_AS(extract_tempo(Notes{}, 480), FeatureError);
  CHECK_THROWS_AS(extract_tempo(Notes{{0, 10, 60, 96}}, 480), FeatureError);
}
