#include "inferalign/midi/token.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <string_view>

namespace inferalign::midi {

namespace {

constexpr std::string_view kindName(TokenKind kind) {
  switch (kind) {
    case TokenKind::NoteOn: return "NoteOn";
    case TokenKind::Duration: return "Duration";
    case TokenKind::TimeShift: return "TimeShift";
    case TokenKind::Tempo: return "Tempo";
    case TokenKind::Bar: return "Bar";
    case TokenKind::Eos: return "EOS";
  }
  return "EOS";
}

// Bin positions of 1/32, 1/16, ..., 4 whole notes: round(31 * j / 7).
constexpr std::array<int, 8> kSnappedBins = {0, 4, 9, 13, 18, 22, 27, 31};

std::array<double, kNumBins> binFactors() {
  // Multiples of a 1/32 note (ppq / 8).
  std::array<double, kNumBins> factors{};
  for (int b = 0; b < kNumBins; ++b) factors[b] = std::exp2(7.0 * b / (kNumBins - 1));
  for (int j = 0; j < 8; ++j) factors[kSnappedBins[j]] = std::exp2(j);
  return factors;
}

const std::array<double, kNumBins>& factors() {
  static const auto table = binFactors();
  return table;
}

}  // namespace

bool Token::valid() const {
  switch (kind) {
    case TokenKind::NoteOn: return value >= 0 && value <= 127;
    case TokenKind::Duration:
    case TokenKind::TimeShift: return value >= 0 && value < kNumBins;
    case TokenKind::Tempo: return value >= kMinBpm && value <= kMaxBpm;
    case TokenKind::Bar:
    case TokenKind::Eos: return value == 0;
  }
  return false;
}

std::string to_string(const Token& token) {
  std::string out(kindName(token.kind));
  if (token.kind != TokenKind::Bar && token.kind != TokenKind::Eos) {
    out += ':';
    out += std::to_string(token.value);
  }
  return out;
}

std::optional<Token> token_from_string(std::string_view text) {
  if (text == "Bar") return Token::bar();
  if (text == "EOS") return Token::eos();
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  const auto name = text.substr(0, colon);
  const auto digits = text.substr(colon + 1);
  int value = 0;
  const auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || end != digits.data() + digits.size()) return std::nullopt;

  Token token;
  if (name == "NoteOn") token = Token::note_on(value);
  else if (name == "Duration") token = Token::duration(value);
  else if (name == "TimeShift") token = Token::time_shift(value);
  else if (name == "Tempo") token = Token::tempo(value);
  else return std::nullopt;
  if (!token.valid()) return std::nullopt;
  return token;
}

int bin_ticks(int bin, int ppq) {
  bin = std::clamp(bin, 0, kNumBins - 1);
  const double ticks = factors()[bin] * ppq / 8.0;
  return std::max(1, static_cast<int>(std::lround(ticks)));
}

int nearest_bin(int ticks, int ppq) {
  int best = 0;
  long best_err = std::labs(static_cast<long>(bin_ticks(0, ppq)) - ticks);
  for (int b = 1; b < kNumBins; ++b) {
    const long err = std::labs(static_cast<long>(bin_ticks(b, ppq)) - ticks);
    if (err < best_err) {
      best = b;
      best_err = err;
    }
  }
  return best;
}

bool well_formed(std::span<const Token> tokens) {
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!tokens[i].valid()) return false;
    if (tokens[i].kind == TokenKind::Eos && i + 1 != tokens.size()) return false;
  }
  return true;
}

std::optional<int> first_tempo(std::span<const Token> tokens) {
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::Eos) break;
    if (t.kind == TokenKind::Tempo) return t.value;
  }
  return std::nullopt;
}

}  // namespace inferalign::midi
