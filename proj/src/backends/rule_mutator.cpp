#include <algorithm>
#include <array>
#include <cctype>
#include <regex>
#include <string>
#include <vector>

#include "inferalign/backends/builtin.hpp"
#include "inferalign/backends/seed.hpp"
#include "inferalign/rewards/rewards.hpp"

namespace inferalign::backends {

namespace {

// Synonym groups. Words carrying hard attributes (keys, tempo words, density
// words) must never appear here.
const std::vector<std::vector<std::string>>& lexicon() {
  static const std::vector<std::vector<std::string>> groups = {
      {"melodic", "tuneful", "lyrical"},
      {"upbeat", "cheerful", "buoyant"},
      {"warm", "mellow", "cozy"},
      {"lively", "energetic", "spirited", "vibrant"},
      {"dark", "brooding", "somber"},
      {"relaxing", "calming", "soothing"},
      {"relaxation", "calm", "tranquility"},
      {"darkness", "gloom", "shadow"},
      {"happiness", "joy", "brightness"},
      {"happy", "joyful", "bright"},
      {"ambient", "atmospheric", "airy"},
      {"meditative", "contemplative", "reflective"},
      {"soft", "gentle", "delicate"},
      {"emotional", "heartfelt", "expressive"},
      {"epic", "grand", "majestic"},
      {"feel", "vibe", "mood"},
      {"song", "piece", "composition", "track"},
      {"tune", "melody"},
      {"evokes", "conveys", "suggests"},
      {"blend", "mix", "combination"},
      {"hints", "touches", "traces"},
      {"featuring", "showcasing", "with"},
  };
  return groups;
}

const std::array<std::string, 8> kDescriptors = {
    "It has a spacious mix.",
    "The phrasing is expressive.",
    "The arrangement feels polished.",
    "It carries a subtle groove.",
    "The dynamics breathe naturally.",
    "The texture is rich and layered.",
    "It unfolds with a clear structure.",
    "The timbres blend smoothly.",
};

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string match_case(const std::string& like, std::string word) {
  if (!like.empty() && std::isupper(static_cast<unsigned char>(like[0]))) {
    word[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(word[0])));
  }
  return word;
}

std::string substitute_synonyms(const std::string& text, Rng& rng) {
  static const std::regex word_re("[A-Za-z]+");
  std::string out;
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), word_re); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    const std::string word = m.str();
    const std::string key = lower(word);
    out.append(text, last, static_cast<std::size_t>(m.position()) - last);
    last = static_cast<std::size_t>(m.position() + m.length());

    std::string replacement = word;
    for (const auto& group : lexicon()) {
      const auto pos = std::find(group.begin(), group.end(), key);
      if (pos == group.end()) continue;
      if (rng.chance(0.5)) {
        std::size_t pick = rng.below(group.size() - 1);
        if (pick >= static_cast<std::size_t>(pos - group.begin())) ++pick;
        replacement = match_case(word, group[pick]);
      }
      break;
    }
    out += replacement;
  }
  out.append(text, last, std::string::npos);
  return out;
}

std::vector<std::string> split_sentences(const std::string& text) {
  std::vector<std::string> sentences;
  std::string current;
  for (std::size_t i = 0; i < text.size(); ++i) {
    current += text[i];
    const bool end = (text[i] == '.' || text[i] == '!' || text[i] == '?') &&
                     (i + 1 == text.size() || text[i + 1] == ' ');
    if (end) {
      sentences.push_back(current);
      current.clear();
      while (i + 1 < text.size() && text[i + 1] == ' ') ++i;
    }
  }
  if (!current.empty()) sentences.push_back(current);
  return sentences;
}

std::string join_sentences(const std::vector<std::string>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    if (s.empty()) continue;
    if (!out.empty()) out += ' ';
    out += s;
  }
  return out;
}

std::string reorder_sentences(const std::string& text, Rng& rng) {
  auto sentences = split_sentences(text);
  if (sentences.size() < 2) return text;
  // Keep the opening sentence, shuffle the rest (Fisher-Yates).
  for (std::size_t i = sentences.size() - 1; i > 1; --i) {
    const std::size_t j = 1 + rng.below(i);
    std::swap(sentences[i], sentences[j]);
  }
  if (sentences.size() == 2 || rng.chance(0.5)) std::swap(sentences[0], sentences[1]);
  for (auto& s : sentences) {
    if (s.back() != '.' && s.back() != '!' && s.back() != '?') s += '.';
  }
  return join_sentences(sentences);
}

std::string toggle_descriptor(const std::string& text, Rng& rng) {
  auto sentences = split_sentences(text);
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    if (std::find(kDescriptors.begin(), kDescriptors.end(), sentences[i]) != kDescriptors.end()) present.push_back(i);
  }
  if (!present.empty() && rng.chance(0.5)) {
    sentences.erase(sentences.begin() + static_cast<std::ptrdiff_t>(present[rng.below(present.size())]));
    return join_sentences(sentences);
  }
  const auto& phrase = kDescriptors[rng.below(kDescriptors.size())];
  if (!sentences.empty()) {
    auto& tail = sentences.back();
    if (tail.back() != '.' && tail.back() != '!' && tail.back() != '?') tail += '.';
  }
  sentences.insert(sentences.begin() + static_cast<std::ptrdiff_t>(rng.below(sentences.size() + 1)), phrase);
  return join_sentences(sentences);
}

std::string mutate_once(const std::string& text, Rng& rng) {
  bool synonyms = rng.chance(0.6);
  const bool reorder = rng.chance(0.4);
  const bool descriptor = rng.chance(0.4);
  if (!synonyms && !reorder && !descriptor) synonyms = true;
  std::string out = text;
  if (synonyms) out = substitute_synonyms(out, rng);
  if (reorder) out = reorder_sentences(out, rng);
  if (descriptor) out = toggle_descriptor(out, rng);
  return out;
}

}  // namespace

std::vector<std::string> rule_mutate(std::string_view caption, int count, std::uint64_t seed) {
  const std::string original(caption);
  const auto attrs = rewards::parse_caption(original);
  std::vector<std::string> out;
  if (count <= 0) return out;

  auto acceptable = [&](const std::string& candidate) {
    return candidate != original && std::find(out.begin(), out.end(), candidate) == out.end() &&
           rewards::same_hard_attributes(rewards::parse_caption(candidate), attrs);
  };

  constexpr int kAttempts = 48;
  for (int i = 0; i < count; ++i) {
    std::string chosen;
    for (int attempt = 0; attempt < kAttempts && chosen.empty(); ++attempt) {
      Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(attempt)}));
      auto candidate = mutate_once(original, rng);
      if (acceptable(candidate)) chosen = std::move(candidate);
    }
    // Short captions can run out of distinct rewrites; append numbered
    // descriptor sentences until the text is new.
    for (std::size_t n = 0; chosen.empty(); ++n) {
      std::string candidate = original;
      if (!candidate.empty() && candidate.back() != '.') candidate += '.';
      if (!candidate.empty()) candidate += ' ';
      candidate += kDescriptors[(static_cast<std::size_t>(i) + n) % kDescriptors.size()];
      if (n >= kDescriptors.size()) candidate += " Variation " + std::to_string(n) + ".";
      if (acceptable(candidate)) chosen = std::move(candidate);
    }
    out.push_back(std::move(chosen));
  }
  return out;
}

std::vector<std::string> RuleMutator::mutate(const MutationRequest& request) {
  return rule_mutate(request.caption, request.count, request.seed);
}

double MockScorer::score(std::span<const std::uint8_t> smf, std::string_view caption) {
  return rewards::mock_score(smf, caption);
}

}  // namespace inferalign::backends
