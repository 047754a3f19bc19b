#include "inferalign/midi/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace inferalign::midi {

namespace {

constexpr const char* kPitchNames[12] = {"C", "C#", "D", "D#", "E", "F",
                                         "F#", "G", "G#", "A", "A#", "B"};
constexpr int kMajorSteps[7] = {0, 2, 4, 5, 7, 9, 11};
constexpr int kMinorSteps[7] = {0, 2, 3, 5, 7, 8, 10};

double pearson(const std::array<double, 12>& x, const std::array<double, 12>& y) {
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / 12.0;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / 12.0;
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 12; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0 || syy <= 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::string to_string(const Key& key) {
  return std::string(kPitchNames[((key.tonic % 12) + 12) % 12]) +
         (key.mode == Mode::Major ? " major" : " minor");
}

Key relative_key(const Key& key) {
  if (key.mode == Mode::Major) return {(key.tonic + 9) % 12, Mode::Minor};
  return {(key.tonic + 3) % 12, Mode::Major};
}

std::array<bool, 12> diatonic_set(const Key& key) {
  std::array<bool, 12> in{};
  const int* steps = key.mode == Mode::Major ? kMajorSteps : kMinorSteps;
  for (int i = 0; i < 7; ++i) in[(key.tonic + steps[i]) % 12] = true;
  return in;
}

PitchClassHistogram pitch_class_histogram(std::span<const NoteEvent> notes) {
  PitchClassHistogram h{};
  for (const auto& n : notes) h[((n.pitch % 12) + 12) % 12] += static_cast<double>(n.duration);
  return h;
}

double key_correlation(const PitchClassHistogram& histogram, const Key& key) {
  const auto& profile = key.mode == Mode::Major ? kMajorProfile : kMinorProfile;
  std::array<double, 12> rotated{};
  for (int pc = 0; pc < 12; ++pc) rotated[pc] = profile[((pc - key.tonic) % 12 + 12) % 12];
  return pearson(histogram, rotated);
}

Key estimate_key(std::span<const NoteEvent> notes) {
  if (notes.empty()) throw FeatureError("no notes");
  const auto histogram = pitch_class_histogram(notes);
  Key best{0, Mode::Major};
  double best_r = -2.0;
  for (int tonic = 0; tonic < 12; ++tonic) {
    for (Mode mode : {Mode::Major, Mode::Minor}) {
      const Key candidate{tonic, mode};
      const double r = key_correlation(histogram, candidate);
      if (r > best_r) {
        best_r = r;
        best = candidate;
      }
    }
  }
  return best;
}

double extract_tempo(const ParsedSmf& smf) {
  if (const auto bpm = smf.bpm()) return *bpm;
  return extract_tempo(smf.notes, smf.ppq);
}

double extract_tempo(std::span<const NoteEvent> notes, int ppq) {
  if (ppq <= 0) throw FeatureError("invalid ppq");
  std::vector<std::int64_t> onsets;
  onsets.reserve(notes.size());
  for (const auto& n : notes) onsets.push_back(n.onset);
  std::sort(onsets.begin(), onsets.end());
  onsets.erase(std::unique(onsets.begin(), onsets.end()), onsets.end());
  if (onsets.size() < 2) throw FeatureError("tempo undecidable: no tempo event and fewer than 2 onsets");

  std::vector<double> gaps;
  for (std::size_t i = 1; i < onsets.size(); ++i) gaps.push_back(static_cast<double>(onsets[i] - onsets[i - 1]));
  std::sort(gaps.begin(), gaps.end());
  const std::size_t mid = gaps.size() / 2;
  const double median = gaps.size() % 2 ? gaps[mid] : 0.5 * (gaps[mid - 1] + gaps[mid]);
  // One beat per quarter note at the default 0.5 s per quarter.
  const double seconds = median / ppq * 0.5;
  return 60.0 / seconds;
}

}  // namespace inferalign::midi
