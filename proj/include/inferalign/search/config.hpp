#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "inferalign/midi/token.hpp"
#include "inferalign/rewards/rewards.hpp"

namespace inferalign::search {

/// Every knob of the search in one place.
struct SearchConfig {
  int m = 100;                 // replacement period, tokens per extension
  int T = 5;                   // mutations per cycle == beams
  int Z = 2;                   // mutation cycles
  std::optional<int> tau;      // replacement cycles per mutation; default floor(N/m) + 1
  std::optional<int> k;        // retained top states; default max(1, ceil(T/2) - 1)
  double alpha = rewards::kDefaultAlpha;
  double beta = rewards::kDefaultBeta;
  int max_tokens = 2000;       // N
  std::uint64_t seed = 0;
  int retries = 2;             // per backend call, after the first attempt
  int ppq = midi::kDefaultPpq;

  int effective_tau() const;
  int effective_k() const;
  /// m >= N: one terminal replacement over independent full generations.
  bool best_of_n() const { return m >= max_tokens; }

  friend bool operator==(const SearchConfig&, const SearchConfig&) = default;
};

/// Every violated constraint, one message each; empty when valid.
std::vector<std::string> validate(const SearchConfig& config);

void to_json(nlohmann::json& j, const SearchConfig& config);
/// Missing fields keep their defaults.
void from_json(const nlohmann::json& j, SearchConfig& config);

}  // namespace inferalign::search
