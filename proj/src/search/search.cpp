#include "inferalign/search/search.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <stdexcept>

#include "inferalign/midi/smf.hpp"

namespace inferalign::search {

namespace {

double composite_of(const SearchState& s) { return s.reward ? s.reward->composite : -std::numeric_limits<double>::infinity(); }

}  // namespace

bool ranks_before(const SearchState& a, const SearchState& b) {
  const double ca = composite_of(a);
  const double cb = composite_of(b);
  if (ca != cb) return ca > cb;
  return a.state_id < b.state_id;
}

std::vector<SearchState> replace(std::vector<SearchState> states, int k, backends::Rng& rng) {
  if (k < 1 || k >= static_cast<int>(states.size())) {
    throw std::invalid_argument("replace requires 1 <= k < number of states");
  }
  for (const auto& s : states) {
    if (!s.reward) throw std::invalid_argument("replace requires every state to carry a reward");
  }
  std::sort(states.begin(), states.end(), ranks_before);
  for (std::size_t slot = static_cast<std::size_t>(k); slot < states.size(); ++slot) {
    const auto& source = states[rng.below(static_cast<std::uint64_t>(k))];
    const int id = states[slot].state_id;
    states[slot] = source;
    states[slot].state_id = id;
  }
  return states;
}

std::uint64_t mutation_seed(const SearchConfig& config, int mutation_cycle) {
  return backends::derive_seed(config.seed, {2, static_cast<std::uint64_t>(mutation_cycle)});
}

ReplacementOutcome run_replacement_cycles(const std::vector<std::string>& captions,
                                          const std::string& original_caption, const SearchConfig& config,
                                          Backends backends, int mutation_cycle, Execution execution) {
  ReplacementOutcome outcome;
  outcome.states.reserve(captions.size());
  for (std::size_t i = 0; i < captions.size(); ++i) {
    outcome.states.push_back({static_cast<int>(i), captions[i], {}, std::nullopt, false});
  }
  if (outcome.states.empty()) return outcome;

  const auto original_attrs = rewards::parse_caption(original_caption);
  const int tau = config.effective_tau();
  const int k = std::min(config.effective_k(), static_cast<int>(outcome.states.size()));

  for (int t = 2; t <= tau; ++t) {
    const CycleContext ctx{original_caption, original_attrs, config, mutation_cycle, t};
    if (execution == Execution::Parallel) extend_and_score_parallel(outcome.states, ctx, backends);
    else extend_and_score_serial(outcome.states, ctx, backends);

    for (const auto& s : outcome.states) {
      outcome.rows.push_back({mutation_cycle, t, s.state_id, s.caption, *s.reward});
    }

    if (outcome.states.size() > 1) {
      backends::Rng rng(backends::derive_seed(
          config.seed, {3, static_cast<std::uint64_t>(mutation_cycle), static_cast<std::uint64_t>(t)}));
      outcome.states = replace(std::move(outcome.states), k, rng);
    }
    std::vector<std::string> top;
    for (int i = 0; i < k; ++i) top.push_back(outcome.states[static_cast<std::size_t>(i)].caption);
    outcome.topk_captions.push_back(std::move(top));
  }
  return outcome;
}

std::vector<Candidate> promote_captions(const std::vector<std::vector<std::string>>& topk_log,
                                        const Candidate& candidate, const std::vector<SearchState>& final_states,
                                        int k, const std::vector<Candidate>& current) {
  struct Tally {
    std::size_t count = 0;
    std::size_t first_seen = 0;
  };
  std::map<std::string, Tally> tallies;
  std::size_t position = 0;
  for (const auto& cycle : topk_log) {
    for (const auto& caption : cycle) {
      auto [it, inserted] = tallies.try_emplace(caption, Tally{0, position});
      ++it->second.count;
      ++position;
    }
  }
  std::vector<std::pair<std::string, Tally>> ranked(tallies.begin(), tallies.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second.count != b.second.count) return a.second.count > b.second.count;
    return a.second.first_seen < b.second.first_seen;
  });
  if (static_cast<int>(ranked.size()) > k) ranked.resize(static_cast<std::size_t>(std::max(k, 0)));

  std::vector<Candidate> promoted;
  for (const auto& [caption, tally] : ranked) {
    std::optional<double> best;
    for (const auto& s : final_states) {
      if (s.caption == caption && s.reward) best = std::max(best.value_or(s.reward->composite), s.reward->composite);
    }
    if (best && *best > candidate.score) promoted.push_back({caption, *best});
  }
  if (promoted.empty()) return current;
  return promoted;
}

SearchReport run_inferalign(const std::string& original_caption, const SearchConfig& config, Backends backends,
                            Execution execution) {
  if (const auto errors = validate(config); !errors.empty()) {
    std::string message = "invalid search config:";
    for (const auto& e : errors) message += "\n  " + e;
    throw std::invalid_argument(message);
  }
  const auto started = std::chrono::steady_clock::now();

  SearchReport report;
  report.config = config;
  report.original_caption = original_caption;

  std::vector<Candidate> candidates{{original_caption}};
  std::optional<SearchState> best;

  for (int z = 0; z < config.Z; ++z) {
    backends::Rng pick(backends::derive_seed(config.seed, {4, static_cast<std::uint64_t>(z)}));
    const Candidate candidate = candidates[pick.below(candidates.size())];

    std::vector<std::string> captions;
    if (config.T == 1) {
      captions = {candidate.caption};
    } else {
      captions = backends.mutator.mutate({candidate.caption, config.T, mutation_seed(config, z)});
      if (static_cast<int>(captions.size()) != config.T) {
        throw backends::BackendError("mutator returned " + std::to_string(captions.size()) + " captions, expected " +
                                         std::to_string(config.T),
                                     false);
      }
    }

    auto outcome = run_replacement_cycles(captions, original_caption, config, backends, z, execution);
    report.per_cycle_rewards.insert(report.per_cycle_rewards.end(), outcome.rows.begin(), outcome.rows.end());

    auto next = promote_captions(outcome.topk_captions, candidate, outcome.states, config.effective_k(), candidates);
    if (next != candidates) {
      for (const auto& c : next) report.promoted_captions.emplace_back(z, c.caption);
    }
    candidates = std::move(next);

    for (const auto& s : outcome.states) {
      if (!best || composite_of(s) > composite_of(*best)) best = s;
    }
    report.running_best.push_back(composite_of(*best));
  }

  report.best_state = *best;
  report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

std::vector<std::uint8_t> render_state(const SearchState& state, int ppq) {
  const auto notes = midi::tokens_to_notes(state.tokens, ppq);
  return midi::notes_to_smf(notes, ppq, midi::first_tempo(state.tokens).value_or(120)).bytes;
}

nlohmann::json to_json(const SearchState& state) {
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& t : state.tokens) tokens.push_back(midi::to_string(t));
  nlohmann::json j = {{"state_id", state.state_id},
                      {"caption", state.caption},
                      {"finished", state.finished},
                      {"n_tokens", state.tokens.size()},
                      {"tokens", std::move(tokens)}};
  if (state.reward) {
    j["reward"] = {{"ra", state.reward->ra},
                   {"rh", state.reward->rh},
                   {"composite", state.reward->composite},
                   {"alpha", state.reward->alpha},
                   {"beta", state.reward->beta}};
  } else {
    j["reward"] = nullptr;
  }
  return j;
}

nlohmann::json to_json(const SearchReport& report, bool include_timing) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.per_cycle_rewards) {
    rows.push_back({{"mutation_cycle", r.mutation_cycle},
                    {"cycle", r.replacement_cycle},
                    {"state_id", r.state_id},
                    {"caption", r.caption},
                    {"ra", r.reward.ra},
                    {"rh", r.reward.rh},
                    {"composite", r.reward.composite}});
  }
  nlohmann::json promoted = nlohmann::json::array();
  for (const auto& [z, caption] : report.promoted_captions) promoted.push_back({{"mutation_cycle", z}, {"caption", caption}});

  nlohmann::json config = report.config;
  config["tau_effective"] = report.config.effective_tau();
  config["k_effective"] = report.config.effective_k();

  nlohmann::json j = {{"mode", report.mode()},
                      {"original_caption", report.original_caption},
                      {"config", std::move(config)},
                      {"best_state", to_json(report.best_state)},
                      {"running_best", report.running_best},
                      {"promoted_captions", std::move(promoted)},
                      {"per_cycle_rewards", std::move(rows)}};
  if (include_timing) j["wall_time_seconds"] = report.wall_time;
  return j;
}

}  // namespace inferalign::search
