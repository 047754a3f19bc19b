// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "corpus.hpp"
#include "inferalign/backends/builtin.hpp"
#include "inferalign/cli/commands.hpp"
#include "inferalign/eval/cosiatec.hpp"
#include "inferalign/eval/metrics.hpp"
#include "inferalign/midi/features.hpp"
#include "inferalign/midi/smf.hpp"
#include "inferalign/rewards/rewards.hpp"
#include "inferalign/search/search.hpp"
#include "oracles.hpp"

using namespace inferalign;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

Outcome harmonic_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(4242);
  int mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    midi::Notes notes;
    const int n = 1 + static_cast<int>(rng() % 64);
    for (int j = 0; j < n; ++j) notes.push_back({j, 1, static_cast<int>(rng() % 128)});
    const midi::Key key{static_cast<int>(rng() % 12), rng() % 2 ? midi::Mode::Major : midi::Mode::Minor};
    const double expected =
        1.0 - static_cast<double>(oracle::off_key_count(notes, key)) / static_cast<double>(notes.size());
    mismatches += rewards::harmonic_consistency(notes, key) != expected;
  }
  const double secs = seconds_since(start);
  return {mismatches == 0 && secs < 5.0, fmt("1000 instances, %d mismatches, %.3f s", mismatches, secs)};
}

search::SearchState random_state(int id, std::mt19937_64& rng) {
  search::SearchState s;
  s.state_id = id;
  s.caption = "caption " + std::to_string(rng() % 1000);
  for (int i = 0, n = static_cast<int>(rng() % 6); i < n; ++i) {
    s.tokens.push_back(midi::Token::note_on(static_cast<int>(rng() % 128)));
  }
  s.reward = rewards::make_breakdown(static_cast<double>(rng() % 7), 0.0, 1.0, 5.0);
  s.finished = rng() % 4 == 0;
  return s;
}

Outcome replacement_invariants() {
  std::mt19937_64 rng(10'000);
  int violations = 0;
  for (int trial = 0; trial < 10'000; ++trial) {
    const int T = 2 + static_cast<int>(rng() % 8);
    const int k = 1 + static_cast<int>(rng() % (T - 1));
    std::vector<search::SearchState> states;
    for (int i = 0; i < T; ++i) states.push_back(random_state(i, rng));
    std::shuffle(states.begin(), states.end(), rng);
    backends::Rng draw(rng());
    const auto out = search::replace(states, k, draw);

    auto ranked = states;
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return std::make_pair(-a.reward->composite, a.state_id) < std::make_pair(-b.reward->composite, b.state_id);
    });
    for (int i = 0; i < k; ++i) violations += !(out[i] == ranked[i]);
    for (int i = k; i < T; ++i) {
      bool copy = false;
      for (int j = 0; j < k; ++j) {
        copy = copy || (out[i].caption == ranked[j].caption && out[i].tokens == ranked[j].tokens &&
                        out[i].reward == ranked[j].reward && out[i].finished == ranked[j].finished);
      }
      violations += !copy;
    }
  }
  return {violations == 0, fmt("10000 calls, %d violations", violations)};
}

Outcome search_improvement() {
  const auto start = Clock::now();
  const auto captions = corpus::read_lines(corpus::fixture("captions16.txt"));
  backends::ToyGeneratorOptions options;
  options.off_key_rate = 0.15;
  backends::ToyGenerator generator(options);
  backends::RuleMutator mutator;
  backends::MockScorer scorer;
  double tree = 0, base = 0, tree_rh = 0, base_rh = 0;
  const int runs = 50;
  for (int s = 0; s < runs; ++s) {
    search::SearchConfig c;
    c.max_tokens = 600;
    c.m = 100;
    c.T = 3;
    c.Z = 2;
    c.tau = 6;
    c.k = 2;
    c.seed = static_cast<std::uint64_t>(s);
    const auto& caption = captions[static_cast<std::size_t>(s) % captions.size()];
    const auto r = search::run_inferalign(caption, c, {generator, mutator, scorer});

    // One path, no mutation and no replacement.
    search::SearchConfig b = c;
    b.T = 1;
    b.Z = 1;
    b.k.reset();
    const auto q = search::run_inferalign(caption, b, {generator, mutator, scorer});

    tree += r.best_state.reward->composite;
    base += q.best_state.reward->composite;
    tree_rh += r.best_state.reward->rh;
    base_rh += q.best_state.reward->rh;
  }
  tree /= runs, base /= runs, tree_rh /= runs, base_rh /= runs;
  const double secs = seconds_since(start);
  return {tree >= 1.05 * base && tree_rh >= base_rh && secs < 60.0,
          fmt("composite %.4f vs baseline %.4f (x%.4f), R_h %.4f vs %.4f, %.2f s", tree, base, tree / base, tree_rh,
              base_rh, secs)};
}

Outcome best_of_n() {
  backends::ToyGenerator generator;
  backends::RuleMutator mutator;
  backends::MockScorer scorer;
  int agree = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    search::SearchConfig c;
    c.m = 400;
    c.max_tokens = 400;
    c.T = 5;
    c.Z = 1;
    c.seed = seed;
    const std::string caption = "An upbeat tune in F major at 128 bpm";
    const auto report = search::run_inferalign(caption, c, {generator, mutator, scorer});

    const auto captions = mutator.mutate({caption, c.T, search::mutation_seed(c, 0)});
    const auto attrs = rewards::parse_caption(caption);
    std::optional<search::SearchState> winner;
    for (int id = 0; id < c.T; ++id) {
      search::SearchState s;
      s.state_id = id;
      s.caption = captions[id];
      s.tokens = generator.generate({captions[id], {}, c.max_tokens, search::beam_seed(c, 0, 2, id)});
      const auto notes = midi::tokens_to_notes(s.tokens);
      const double rh = rewards::harmonic_consistency(notes, rewards::resolve_reward_key(attrs, notes));
      const double ra = rewards::text_audio_consistency(s.tokens, caption, scorer);
      s.reward = rewards::make_breakdown(ra, rh, c.alpha, c.beta);
      if (!winner || s.reward->composite > winner->reward->composite) winner = s;
    }
    agree += report.mode() == "best-of-N" && report.best_state == *winner;
  }
  return {agree == 20, fmt("%d/20 runs bit-identical to the argmax of independent generations", agree)};
}

Outcome key_estimation() {
  const int major[] = {0, 2, 4, 5, 7, 9, 11, 12};
  const int minor[] = {0, 2, 3, 5, 7, 8, 10, 12};
  int correct = 0;
  for (int tonic = 0; tonic < 12; ++tonic) {
    for (auto mode : {midi::Mode::Major, midi::Mode::Minor}) {
      midi::Notes notes;
      for (int i = 0; i < 8; ++i) {
        notes.push_back({i * 480LL, 480, 60 + tonic + (mode == midi::Mode::Major ? major : minor)[i], 96});
      }
      const auto estimated = midi::estimate_key(notes);
      correct += estimated == oracle::ks_key(notes) && estimated == midi::Key{tonic, mode};
    }
  }
  std::mt19937_64 rng(77);
  int checked = 0, equivariant = 0;
  while (checked < 200) {
    midi::Notes notes;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) {
      notes.push_back({i * 120LL, 1 + static_cast<std::int64_t>(rng() % 960), 36 + static_cast<int>(rng() % 60), 96});
    }
    if (!oracle::ks_unique(notes)) continue;
    const int t = static_cast<int>(rng() % 12);
    const auto base = midi::estimate_key(notes);
    const auto moved = midi::estimate_key(midi::transpose(notes, t));
    equivariant += moved == midi::Key{(base.tonic + t) % 12, base.mode};
    ++checked;
  }
  return {correct >= 22 && equivariant == 200,
          fmt("%d/24 scales correct, %d/200 corpora equivariant", correct, equivariant)};
}

Outcome tempo_bins() {
  const double edges[] = {40, 60, 70, 90, 110, 140, 160, 210};
  const double reps[] = {30, 50, 65, 80, 100, 120, 150, 180, 240};
  int failures = 0, probes = 0;
  for (int i = 0; i < 8; ++i) {
    for (double bpm : {edges[i], std::nextafter(edges[i], 0.0), edges[i] - 0.5, edges[i] + 0.5}) {
      int expected = 0;
      for (double e : edges) expected += bpm >= e;
      failures += eval::tempo_bin(bpm) != expected;
      ++probes;
    }
  }
  int pairs = 0;
  for (int a = 0; a < 9; ++a) {
    failures += eval::tempo_bin(reps[a]) != a;
    for (int b = 0; b < 9; ++b) {
      const auto m = eval::tb_tbt(reps[a], reps[b]);
      failures += m.tb != (a == b) || m.tbt != (std::abs(a - b) <= 1);
      ++pairs;
    }
  }
  return {failures == 0 && pairs == 81, fmt("%d boundary probes, %d bin pairs, %d failures", probes, pairs, failures)};
}

bool exact_cover(const eval::Cover& cover, const std::vector<eval::Point>& points) {
  std::set<eval::Point> covered;
  for (const auto& t : cover.tecs) {
    for (const auto& p : t.covered_points()) {
      if (!covered.insert(p).second) return false;
    }
  }
  return covered == std::set<eval::Point>(points.begin(), points.end());
}

Outcome compression() {
  const std::vector<eval::Point> motif = {{0, 60}, {1, 64}, {3, 62}, {4, 67}};
  const std::vector<eval::Point> shifts = {{0, 0}, {10, 2}, {23, -5}, {37, 7}};
  std::vector<eval::Point> fixture;
  for (const auto& s : shifts) {
    for (const auto& p : motif) fixture.push_back(p + s);
  }
  const auto cover = eval::cosiatec(fixture);
  const double cr = cover.compression_ratio();
  bool ok = std::abs(cr - 16.0 / 7.0) < 1e-9 && std::abs(cr - oracle::cosiatec(fixture).ratio()) < 1e-9 &&
            exact_cover(cover, fixture);

  std::mt19937_64 rng(20);
  int matched = 0;
  for (int i = 0; i < 20; ++i) {
    std::set<eval::Point> pts;
    const int n = 8 + static_cast<int>(rng() % 25);
    while (static_cast<int>(pts.size()) < n) {
      pts.insert({static_cast<std::int64_t>(rng() % 16), 40 + static_cast<std::int64_t>(rng() % 8)});
    }
    const std::vector<eval::Point> points(pts.begin(), pts.end());
    const auto got = eval::cosiatec(points);
    const auto want = oracle::cosiatec(points);
    bool same = got.tecs.size() == want.chosen.size() && got.compression_ratio() == want.ratio();
    for (std::size_t j = 0; same && j < got.tecs.size(); ++j) {
      same = got.tecs[j].pattern == want.chosen[j].pattern && got.tecs[j].translators == want.chosen[j].translators;
    }
    matched += same && exact_cover(got, points);
  }
  ok = ok && matched == 20;
  return {ok, fmt("motif CR %.12f (16/7 = %.12f), %d/20 random sets match the oracle", cr, 16.0 / 7.0, matched)};
}

Outcome smf_round_trip() {
  std::mt19937_64 rng(20240501);
  int ok = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto notes = corpus::random_notes(rng, 1 + static_cast<int>(rng() % 120));
    const int ppq = std::array{96, 192, 480, 960}[rng() % 4];
    const auto encoded = midi::notes_to_smf(notes, ppq, 30 + static_cast<int>(rng() % 250));
    ok += encoded.truncated_notes == 0 && midi::parse_smf(encoded.bytes).notes == notes;
  }
  midi::Notes pinned;
  for (int i = 0; i < 24; ++i) pinned.push_back({i * 240LL, 120 + 20 * (i % 5), 48 + (i * 7) % 36, 60 + i});
  const auto first = midi::notes_to_smf(pinned, 480, 96.0).bytes;
  const bool stable = first == midi::notes_to_smf(pinned, 480, 96.0).bytes &&
                      first == midi::read_file(corpus::fixture("pinned.mid").string());
  return {ok == 500 && stable, fmt("%d/500 round trips, pinned fixture %s", ok, stable ? "identical" : "differs")};
}

Outcome ablation_shape() {
  corpus::TempDir dir("acceptance_ablation");
  corpus::write_references(corpus::fixture("captions16.txt"), dir.path / "refs");
  cli::RunManifest m;
  m.captions_file = corpus::fixture("captions16.txt").string();
  m.config.T = 3;
  m.config.m = 100;
  m.jobs = 4;
  std::ostringstream err;
  const int code = cli::cmd_ablate(m, {{100, 500, 1000, 2000}, {1, 3, 5}}, (dir.path / "refs").string(),
                                   (dir.path / "out").string(), err);
  const auto m_csv = corpus::read_lines(dir.path / "out" / "ablation_m.csv");
  const auto t_csv = corpus::read_lines(dir.path / "out" / "ablation_T.csv");
  const std::vector<std::string> rows = {"TB (%)", "TBT (%)", "CK (%)", "CKD (%)"};
  auto shaped = [&](const std::vector<std::string>& csv, const std::string& header, long commas) {
    if (csv.size() != 5 || csv[0] != header) return false;
    for (std::size_t i = 1; i < 5; ++i) {
      if (csv[i].rfind(rows[i - 1] + ",", 0) != 0 || std::count(csv[i].begin(), csv[i].end(), ',') != commas) {
        return false;
      }
    }
    return true;
  };
  const bool ok = code == 0 && shaped(m_csv, "m,100,500,1000,2000", 4) && shaped(t_csv, "T,1,3,5", 3);
  std::string detail = "tables 5x5 and 5x4";
  if (m_csv.size() > 1) detail += "; m " + m_csv[1];
  if (t_csv.size() > 1) detail += "; T " + t_csv[1];
  return {ok, detail};
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"harmonic consistency oracle", harmonic_oracle},
      {"replacement invariants", replacement_invariants},
      {"search improvement", search_improvement},
      {"best-of-N equivalence", best_of_n},
      {"key estimation", key_estimation},
      {"tempo bins", tempo_bins},
      {"compression ratio", compression},
      {"SMF round trip", smf_round_trip},
      {"ablation harness shape", ablation_shape},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - failed << "/" << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
