#include "inferalign/rewards/caption.hpp"

#include <array>
#include <regex>
#include <utility>
#include <vector>

namespace inferalign::rewards {

namespace {

struct WordValue {
  const char* word;
  double value;
};

constexpr std::array<WordValue, 6> kTempoWords = {{
    {"largo", 50}, {"adagio", 70}, {"andante", 90},
    {"moderato", 110}, {"allegro", 140}, {"presto", 180},
}};

constexpr std::array<WordValue, 3> kDensityWords = {{{"sparse", 1.0}, {"busy", 3.0}, {"dense", 4.0}}};

int natural_pitch_class(char letter) {
  switch (letter) {
    case 'C': return 0;
    case 'D': return 2;
    case 'E': return 4;
    case 'F': return 5;
    case 'G': return 7;
    case 'A': return 9;
    case 'B': return 11;
  }
  return 0;
}

struct CompiledWord {
  std::regex re;
  double value;
};

template <std::size_t N>
std::vector<CompiledWord> compile(const std::array<WordValue, N>& table) {
  std::vector<CompiledWord> out;
  for (const auto& [word, value] : table) {
    out.push_back({std::regex(std::string("\\b") + word + "\\b", std::regex::icase), value});
  }
  return out;
}

// Earliest whole-word, case-insensitive hit.
std::optional<double> first_word(const std::string& text, const std::vector<CompiledWord>& table) {
  std::optional<std::pair<std::ptrdiff_t, double>> best;
  for (const auto& [re, value] : table) {
    std::smatch m;
    if (std::regex_search(text, m, re) && (!best || m.position(0) < best->first)) {
      best = {m.position(0), value};
    }
  }
  if (!best) return std::nullopt;
  return best->second;
}

}  // namespace

CaptionAttributes parse_caption(std::string_view view) {
  CaptionAttributes attrs;
  attrs.raw_text = std::string(view);
  const std::string& text = attrs.raw_text;

  static const auto tempo_words = compile(kTempoWords);
  static const auto density_words = compile(kDensityWords);
  static const std::regex key_re(
      R"((^|[^A-Za-z])([A-G])(#|b| sharp| flat)?[ -]+([Mm]ajor|[Mm]inor|MAJOR|MINOR)\b)");
  std::smatch m;
  if (std::regex_search(text, m, key_re)) {
    int tonic = natural_pitch_class(m[2].str()[0]);
    const std::string accidental = m[3].str();
    if (accidental == "#" || accidental == " sharp") tonic += 1;
    if (accidental == "b" || accidental == " flat") tonic += 11;
    const char mode = m[4].str()[1];
    attrs.key = midi::Key{tonic % 12, (mode == 'a' || mode == 'A') ? midi::Mode::Major : midi::Mode::Minor};
  }

  static const std::regex bpm_re(R"((\d{1,4})\s*(bpm|BPM|beats per minute)\b)");
  if (std::regex_search(text, m, bpm_re)) {
    const int bpm = std::stoi(m[1].str());
    if (bpm >= midi::kMinBpm && bpm <= midi::kMaxBpm) attrs.tempo_bpm = bpm;
  }
  if (!attrs.tempo_bpm) {
    if (const auto bpm = first_word(text, tempo_words)) attrs.tempo_bpm = static_cast<int>(*bpm);
  }

  static const std::regex density_re(R"((\d+(\.\d+)?)\s+notes per beat)", std::regex::icase);
  if (std::regex_search(text, m, density_re)) {
    const double d = std::stod(m[1].str());
    if (d > 0) attrs.density = d;
  }
  if (!attrs.density) attrs.density = first_word(text, density_words);
  return attrs;
}

bool same_hard_attributes(const CaptionAttributes& a, const CaptionAttributes& b) {
  return a.key == b.key && a.tempo_bpm == b.tempo_bpm && a.density == b.density;
}

}  // namespace inferalign::rewards
