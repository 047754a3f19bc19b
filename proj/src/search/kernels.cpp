#include <algorithm>
#include <exception>
#include <mutex>
#include <optional>

#include <spdlog/spdlog.h>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "inferalign/search/search.hpp"

namespace inferalign::search {

namespace {

template <typename F>
auto with_retries(int retries, F&& f) {
  for (int attempt = 0;; ++attempt) {
    try {
      return f();
    } catch (const backends::BackendError& e) {
      if (!e.retriable() || attempt >= retries) throw;
    }
  }
}

struct Guards {
  std::mutex generator;
  std::mutex scorer;
  bool serial_generator;
  bool serial_scorer;
};

template <typename F>
auto guarded(std::mutex& m, bool serial, F&& f) {
  if (!serial) return f();
  std::lock_guard lock(m);
  return f();
}

// Extends one beam and computes its reward. Returns false when the scorer
// failed for good; ra is then filled in by the caller.
bool process_state(SearchState& state, const CycleContext& ctx, Backends& b, Guards& guards) {
  const auto& cfg = ctx.config;
  bool changed = false;
  const int length = static_cast<int>(state.tokens.size());
  if (!state.finished && length < cfg.max_tokens) {
    backends::GeneratorRequest request;
    request.caption = state.caption;
    request.prefix = state.tokens;
    request.n_tokens = std::min(cfg.m, cfg.max_tokens - length);
    request.seed = beam_seed(cfg, ctx.mutation_cycle, ctx.replacement_cycle, state.state_id);
    auto fresh = with_retries(cfg.retries, [&] {
      return guarded(guards.generator, guards.serial_generator, [&] { return b.generator.generate(request); });
    });
    if (static_cast<int>(fresh.size()) > request.n_tokens) fresh.resize(static_cast<std::size_t>(request.n_tokens));
    const auto eos = std::find_if(fresh.begin(), fresh.end(),
                                  [](const midi::Token& t) { return t.kind == midi::TokenKind::Eos; });
    if (eos != fresh.end()) {
      fresh.erase(eos + 1, fresh.end());
      state.finished = true;
    }
    changed = !fresh.empty();
    state.tokens.insert(state.tokens.end(), fresh.begin(), fresh.end());
  }
  if (!changed && state.reward) return true;

  const auto notes = midi::tokens_to_notes(state.tokens, cfg.ppq);
  double rh = 0.0;
  if (!notes.empty()) rh = rewards::harmonic_consistency(notes, rewards::resolve_reward_key(ctx.original_attrs, notes));

  try {
    const double ra = with_retries(cfg.retries, [&] {
      return guarded(guards.scorer, guards.serial_scorer, [&] {
        return rewards::text_audio_consistency(state.tokens, ctx.original_caption, b.scorer, cfg.ppq);
      });
    });
    state.reward = rewards::make_breakdown(ra, rh, cfg.alpha, cfg.beta);
    return true;
  } catch (const backends::BackendError& e) {
    spdlog::warn("scoring state {} failed after {} retries: {}", state.state_id, cfg.retries, e.what());
    state.reward = rewards::make_breakdown(0.0, rh, cfg.alpha, cfg.beta);
    return false;
  }
}

void settle_failures(std::vector<SearchState>& states, const std::vector<char>& ok, const CycleContext& ctx) {
  if (std::all_of(ok.begin(), ok.end(), [](char v) { return v != 0; })) return;
  std::optional<double> worst;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (ok[i]) worst = std::min(worst.value_or(states[i].reward->ra), states[i].reward->ra);
  }
  if (!worst) throw backends::BackendError("scorer failed for every state in the cycle", false);
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (ok[i]) continue;
    auto& r = *states[i].reward;
    spdlog::warn("state {}: using worst observed ra {} for this cycle", states[i].state_id, *worst);
    r = rewards::make_breakdown(*worst, r.rh, ctx.config.alpha, ctx.config.beta);
  }
}

}  // namespace

std::uint64_t beam_seed(const SearchConfig& config, int mutation_cycle, int replacement_cycle, int state_id) {
  return backends::derive_seed(config.seed, {1, static_cast<std::uint64_t>(mutation_cycle),
                                             static_cast<std::uint64_t>(replacement_cycle),
                                             static_cast<std::uint64_t>(state_id)});
}

void extend_and_score_serial(std::vector<SearchState>& states, const CycleContext& ctx, Backends backends) {
  Guards guards{{}, {}, false, false};
  std::vector<char> ok(states.size(), 1);
  for (std::size_t i = 0; i < states.size(); ++i) ok[i] = process_state(states[i], ctx, backends, guards);
  settle_failures(states, ok, ctx);
}

void extend_and_score_parallel(std::vector<SearchState>& states, const CycleContext& ctx, Backends backends) {
  Guards guards{{}, {}, !backends.generator.concurrent(), !backends.scorer.concurrent()};
  std::vector<char> ok(states.size(), 1);
  std::vector<std::exception_ptr> errors(states.size());
  const long n = static_cast<long>(states.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < n; ++i) {
    try {
      ok[i] = process_state(states[i], ctx, backends, guards);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  settle_failures(states, ok, ctx);
}

}  // namespace inferalign::search
