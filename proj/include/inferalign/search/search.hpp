#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "inferalign/backends/interfaces.hpp"
#include "inferalign/backends/seed.hpp"
#include "inferalign/execution.hpp"
#include "inferalign/rewards/rewards.hpp"
#include "inferalign/search/config.hpp"

namespace inferalign::search {

/// One beam: the caption steering it, the tokens generated so far and the
/// reward of exactly those tokens against the original caption.
struct SearchState {
  int state_id = 0;
  std::string caption;
  std::vector<midi::Token> tokens;
  std::optional<rewards::RewardBreakdown> reward;
  bool finished = false;  // EOS seen

  friend bool operator==(const SearchState&, const SearchState&) = default;
};

struct Backends {
  backends::Generator& generator;
  backends::Mutator& mutator;
  backends::Scorer& scorer;
};

using inferalign::Execution;

struct RewardRow {
  int mutation_cycle = 0;     // 0-based
  int replacement_cycle = 0;  // t in 2..tau
  int state_id = 0;
  std::string caption;
  rewards::RewardBreakdown reward;

  friend bool operator==(const RewardRow&, const RewardRow&) = default;
};

/// Rank order: composite descending, lower state_id first on ties.
bool ranks_before(const SearchState& a, const SearchState& b);

/// Keeps the k best states (in rank order) and fills every other slot with a
/// deep copy, caption included, of a uniformly drawn top-k state. A replaced
/// slot keeps its own state_id so it draws its own random stream afterwards.
/// Every state must carry a reward and 1 <= k < states.size().
std::vector<SearchState> replace(std::vector<SearchState> states, int k, backends::Rng& rng);

struct CycleContext {
  const std::string& original_caption;
  const rewards::CaptionAttributes& original_attrs;
  const SearchConfig& config;
  int mutation_cycle;
  int replacement_cycle;
};
/// Extends every unfinished state by up to m tokens (never past max_tokens)
/// and scores every state against the original caption. States whose tokens
/// did not change keep their reward. Serial reference implementation.
void extend_and_score_serial(std::vector<SearchState>& states, const CycleContext& ctx, Backends backends);
/// OpenMP variant of extend_and_score_serial; identical results.
void extend_and_score_parallel(std::vector<SearchState>& states, const CycleContext& ctx, Backends backends);

/// Seed for a beam's generator call; independent of scheduling.
std::uint64_t beam_seed(const SearchConfig& config, int mutation_cycle, int replacement_cycle, int state_id);
std::uint64_t mutation_seed(const SearchConfig& config, int mutation_cycle);

struct ReplacementOutcome {
  std::vector<SearchState> states;                     // after the last replacement
  std::vector<std::vector<std::string>> topk_captions;  // one entry per t = 2..tau
  std::vector<RewardRow> rows;                          // scored states, pre-replacement
};

ReplacementOutcome run_replacement_cycles(const std::vector<std::string>& captions,
                                          const std::string& original_caption, const SearchConfig& config,
                                          Backends backends, int mutation_cycle = 0,
                                          Execution execution = Execution::Parallel);

struct Candidate {
  std::string caption;
  double score = -std::numeric_limits<double>::infinity();  // best composite it reached

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

/// Candidate-set update after a mutation cycle. Takes the k most frequent
/// captions in the top-k log (ties: earliest first appearance) and keeps those
/// whose best final composite beats the candidate's score. When none does the
/// current set is returned unchanged.
std::vector<Candidate> promote_captions(const std::vector<std::vector<std::string>>& topk_log,
                                        const Candidate& candidate, const std::vector<SearchState>& final_states,
                                        int k, const std::vector<Candidate>& current);

struct SearchReport {
  SearchState best_state;
  std::vector<RewardRow> per_cycle_rewards;
  std::vector<std::pair<int, std::string>> promoted_captions;  // (mutation cycle, caption)
  std::vector<double> running_best;                            // after each mutation cycle
  SearchConfig config;
  std::string original_caption;
  double wall_time = 0.0;

  std::string mode() const { return config.best_of_n() ? "best-of-N" : "tree-search"; }
};

/// The full search: Z mutation cycles, each mutating a candidate drawn from
/// the candidate set into T captions, running tau replacement cycles and
/// promoting winning captions. Returns the best state seen at the end of any
/// mutation cycle.
SearchReport run_inferalign(const std::string& original_caption, const SearchConfig& config, Backends backends,
                            Execution execution = Execution::Parallel);

nlohmann::json to_json(const SearchState& state);
nlohmann::json to_json(const SearchReport& report, bool include_timing = true);

/// SMF bytes of a state's tokens at its own tempo.
std::vector<std::uint8_t> render_state(const SearchState& state, int ppq = midi::kDefaultPpq);

}  // namespace inferalign::search
