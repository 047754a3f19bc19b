#pragma once

// Independent brute-force reference implementations. They share no code with
// the library beyond plain data types, and favor obviousness over speed.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "inferalign/eval/cosiatec.hpp"
#include "inferalign/midi/features.hpp"
#include "inferalign/midi/notes.hpp"

namespace oracle {

using inferalign::eval::Point;
using inferalign::midi::Key;
using inferalign::midi::Mode;
using inferalign::midi::NoteEvent;

// Scale degrees spelled as whole/half steps from the tonic.
inline std::set<int> scale_classes(const Key& key) {
  const std::array<int, 7> major_steps = {2, 2, 1, 2, 2, 2, 1};
  const std::array<int, 7> minor_steps = {2, 1, 2, 2, 1, 2, 2};
  const auto& steps = key.mode == Mode::Major ? major_steps : minor_steps;
  std::set<int> out;
  int pc = key.tonic;
  for (int s : steps) {
    out.insert(pc % 12);
    pc += s;
  }
  return out;
}

inline std::size_t off_key_count(const std::vector<NoteEvent>& notes, const Key& key) {
  const auto scale = scale_classes(key);
  std::size_t off = 0;
  for (const auto& n : notes) {
    int pc = n.pitch;
    while (pc >= 12) pc -= 12;
    if (!scale.count(pc)) ++off;
  }
  return off;
}

// Krumhansl-Kessler probe-tone ratings, major then minor, starting at the tonic.
inline const double kk_major[12] = {6.35, 2.23, 3.48, 2.33, 4.38, 4.09, 2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
inline const double kk_minor[12] = {6.33, 2.68, 3.52, 5.38, 2.60, 3.53, 2.54, 4.75, 3.98, 2.69, 3.34, 3.17};

inline double pearson12(const double* x, const double* y) {
  double mx = 0, my = 0;
  for (int i = 0; i < 12; ++i) {
    mx += x[i] / 12;
    my += y[i] / 12;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 12; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0;
  return sxy / std::sqrt(sxx * syy);
}

struct KeyScore {
  Key key;
  double r;
};

// All 24 correlations, in (tonic, major before minor) order.
inline std::vector<KeyScore> ks_scores(const std::vector<NoteEvent>& notes) {
  double hist[12] = {};
  for (const auto& n : notes) hist[n.pitch % 12] += static_cast<double>(n.duration);
  std::vector<KeyScore> out;
  for (int tonic = 0; tonic < 12; ++tonic) {
    for (int mode = 0; mode < 2; ++mode) {
      double profile[12];
      for (int pc = 0; pc < 12; ++pc) {
        const int degree = (pc - tonic + 12) % 12;
        profile[pc] = mode == 0 ? kk_major[degree] : kk_minor[degree];
      }
      out.push_back({Key{tonic, mode == 0 ? Mode::Major : Mode::Minor}, pearson12(hist, profile)});
    }
  }
  return out;
}

inline Key ks_key(const std::vector<NoteEvent>& notes) {
  const auto scores = ks_scores(notes);
  KeyScore best = scores.front();
  for (const auto& s : scores) {
    if (s.r > best.r) best = s;
  }
  return best.key;
}

// True when the best correlation beats the runner-up by a clear margin.
inline bool ks_unique(const std::vector<NoteEvent>& notes, double margin = 1e-9) {
  auto scores = ks_scores(notes);
  std::sort(scores.begin(), scores.end(), [](const KeyScore& a, const KeyScore& b) { return a.r > b.r; });
  return scores[0].r - scores[1].r > margin;
}

// ---- COSIATEC -------------------------------------------------------------

struct OracleTec {
  std::vector<Point> pattern;     // sorted
  std::vector<Point> translators; // sorted, first is (0,0)
  std::set<Point> covered;

  std::size_t cost() const { return pattern.size() + translators.size() - 1; }
};

inline OracleTec tec_of(std::vector<Point> pattern, const std::set<Point>& data) {
  std::sort(pattern.begin(), pattern.end());
  std::vector<Point> translators;
  for (const auto& d : data) {
    const Point v{d.x - pattern[0].x, d.y - pattern[0].y};
    bool ok = true;
    for (const auto& p : pattern) ok = ok && data.count(Point{p.x + v.x, p.y + v.y});
    if (ok) translators.push_back(v);
  }
  std::sort(translators.begin(), translators.end());
  // Re-express relative to the smallest occurrence.
  const Point shift = translators.front();
  OracleTec t;
  for (const auto& p : pattern) t.pattern.push_back({p.x + shift.x, p.y + shift.y});
  for (const auto& v : translators) t.translators.push_back({v.x - shift.x, v.y - shift.y});
  for (const auto& v : t.translators) {
    for (const auto& p : t.pattern) t.covered.insert({p.x + v.x, p.y + v.y});
  }
  return t;
}

// Every distinct TEC generated by a maximal translatable pattern of `data`.
inline std::vector<OracleTec> all_tecs(const std::set<Point>& data) {
  std::set<Point> vectors;
  for (const auto& a : data) {
    for (const auto& b : data) {
      if (a < b) vectors.insert({b.x - a.x, b.y - a.y});
    }
  }
  std::map<std::pair<std::vector<Point>, std::vector<Point>>, OracleTec> unique;
  for (const auto& v : vectors) {
    std::vector<Point> mtp;
    for (const auto& p : data) {
      if (data.count(Point{p.x + v.x, p.y + v.y})) mtp.push_back(p);
    }
    auto t = tec_of(mtp, data);
    unique.emplace(std::make_pair(t.pattern, t.translators), t);
  }
  std::vector<OracleTec> out;
  for (auto& [_, t] : unique) out.push_back(t);
  return out;
}

inline bool oracle_better(const OracleTec& a, const OracleTec& b) {
  // Compare a.covered/a.cost against b.covered/b.cost exactly.
  const long double lhs = static_cast<long double>(a.covered.size()) * b.cost();
  const long double rhs = static_cast<long double>(b.covered.size()) * a.cost();
  if (lhs != rhs) return lhs > rhs;
  if (a.covered.size() != b.covered.size()) return a.covered.size() > b.covered.size();
  return a.pattern < b.pattern;
}

struct OracleCover {
  std::vector<OracleTec> chosen;
  std::size_t points = 0;

  std::size_t length() const {
    std::size_t s = 0;
    for (const auto& t : chosen) s += t.cost();
    return s;
  }
  double ratio() const { return static_cast<double>(points) / static_cast<double>(length()); }
};

inline OracleCover cosiatec(const std::vector<Point>& input) {
  std::set<Point> remaining(input.begin(), input.end());
  OracleCover cover;
  cover.points = remaining.size();
  while (!remaining.empty()) {
    OracleTec best;
    if (remaining.size() == 1) {
      best = tec_of({*remaining.begin()}, remaining);
    } else {
      auto tecs = all_tecs(remaining);
      best = tecs.front();
      for (const auto& t : tecs) {
        if (oracle_better(t, best)) best = t;
      }
    }
    for (const auto& p : best.covered) remaining.erase(p);
    cover.chosen.push_back(best);
  }
  return cover;
}

// ---- SMF ------------------------------------------------------------------

inline void put_vlq(std::vector<std::uint8_t>& out, std::uint32_t v) {
  std::vector<std::uint8_t> groups;
  do {
    groups.push_back(v & 0x7F);
    v >>= 7;
  } while (v);
  for (std::size_t i = groups.size(); i-- > 0;) out.push_back(groups[i] | (i ? 0x80 : 0));
}

inline void put_be(std::vector<std::uint8_t>& out, std::uint32_t v, int bytes) {
  for (int i = bytes - 1; i >= 0; --i) out.push_back((v >> (8 * i)) & 0xFF);
}

}  // namespace oracle
