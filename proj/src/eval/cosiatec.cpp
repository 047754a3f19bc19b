#include "inferalign/eval/cosiatec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace inferalign::eval {

namespace {

struct VectorHit {
  Point v;
  std::uint32_t i;
};

bool contains(std::span<const Point> sorted, Point p) { return std::binary_search(sorted.begin(), sorted.end(), p); }

// Maximal translatable patterns, one per translational class, in order of
// first appearance when vectors are scanned in ascending order.
std::vector<std::vector<Point>> maximal_patterns(std::span<const Point> d) {
  const std::size_t n = d.size();
  std::vector<VectorHit> hits;
  hits.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) hits.push_back({d[j] - d[i], static_cast<std::uint32_t>(i)});
  }
  std::sort(hits.begin(), hits.end(), [](const VectorHit& a, const VectorHit& b) {
    if (a.v != b.v) return a.v < b.v;
    return a.i < b.i;
  });

  struct ShapeHash {
    std::size_t operator()(const std::vector<Point>& shape) const {
      std::size_t h = shape.size();
      for (const auto& p : shape) {
        h ^= std::hash<std::int64_t>{}(p.x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h ^= std::hash<std::int64_t>{}(p.y) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
      }
      return h;
    }
  };
  std::unordered_set<std::vector<Point>, ShapeHash> seen;
  std::vector<std::vector<Point>> patterns;

  for (std::size_t start = 0; start < hits.size();) {
    std::size_t end = start;
    while (end < hits.size() && hits[end].v == hits[start].v) ++end;
    std::vector<Point> pattern;
    pattern.reserve(end - start);
    for (std::size_t h = start; h < end; ++h) pattern.push_back(d[hits[h].i]);
    std::vector<Point> shape;
    shape.reserve(pattern.size());
    for (const auto& p : pattern) shape.push_back(p - pattern.front());
    if (seen.insert(std::move(shape)).second) patterns.push_back(std::move(pattern));
    start = end;
  }
  return patterns;
}

Tec make_tec(std::vector<Point> pattern, std::span<const Point> d) {
  Tec tec;
  const Point anchor = pattern.front();
  for (const auto& target : d) {
    const Point v = target - anchor;
    const bool fits = std::all_of(pattern.begin() + 1, pattern.end(), [&](const Point& p) { return contains(d, p + v); });
    if (fits) tec.translators.push_back(v);
  }
  // Re-anchor on the smallest occurrence so the zero vector comes first.
  const Point shift = tec.translators.front();
  for (auto& p : pattern) p = p + shift;
  for (auto& v : tec.translators) v = v - shift;
  tec.pattern = std::move(pattern);
  tec.coverage = tec.covered_points().size();
  return tec;
}

}  // namespace

std::vector<Point> Tec::covered_points() const {
  std::vector<Point> out;
  out.reserve(pattern.size() * translators.size());
  for (const auto& v : translators) {
    for (const auto& p : pattern) out.push_back(p + v);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Point> normalize(std::span<const Point> points) {
  std::vector<Point> out(points.begin(), points.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Tec> siatec_serial(std::span<const Point> dataset) {
  auto patterns = maximal_patterns(dataset);
  std::vector<Tec> tecs;
  tecs.reserve(patterns.size());
  for (auto& p : patterns) tecs.push_back(make_tec(std::move(p), dataset));
  return tecs;
}

std::vector<Tec> siatec_parallel(std::span<const Point> dataset) {
  auto patterns = maximal_patterns(dataset);
  std::vector<Tec> tecs(patterns.size());
  const long n = static_cast<long>(patterns.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) tecs[i] = make_tec(std::move(patterns[i]), dataset);
  return tecs;
}

bool better_tec(const Tec& a, const Tec& b) {
  // coverage / cost compared exactly by cross-multiplication.
  const auto lhs = static_cast<unsigned __int128>(a.coverage) * b.cost();
  const auto rhs = static_cast<unsigned __int128>(b.coverage) * a.cost();
  if (lhs != rhs) return lhs > rhs;
  if (a.coverage != b.coverage) return a.coverage > b.coverage;
  return a.pattern < b.pattern;
}

std::size_t Cover::encoding_length() const {
  std::size_t total = 0;
  for (const auto& t : tecs) total += t.cost();
  return total;
}

double Cover::compression_ratio() const {
  const auto length = encoding_length();
  return length == 0 ? 1.0 : static_cast<double>(points) / static_cast<double>(length);
}

Cover cosiatec(std::span<const Point> input, Execution execution) {
  Cover cover;
  auto remaining = normalize(input);
  cover.points = remaining.size();

  while (!remaining.empty()) {
    Tec best;
    if (remaining.size() == 1) {
      best.pattern = {remaining.front()};
      best.translators = {Point{0, 0}};
      best.coverage = 1;
    } else {
      auto tecs = execution == Execution::Parallel ? siatec_parallel(remaining) : siatec_serial(remaining);
      std::size_t pick = 0;
      for (std::size_t i = 1; i < tecs.size(); ++i) {
        if (better_tec(tecs[i], tecs[pick])) pick = i;
      }
      best = std::move(tecs[pick]);
    }
    const auto covered = best.covered_points();
    std::vector<Point> rest;
    rest.reserve(remaining.size() - covered.size());
    std::set_difference(remaining.begin(), remaining.end(), covered.begin(), covered.end(), std::back_inserter(rest));
    remaining = std::move(rest);
    cover.tecs.push_back(std::move(best));
  }
  return cover;
}

std::vector<Point> notes_to_points(std::span<const midi::NoteEvent> notes, int ppq) {
  const double grid = std::max(1, ppq / 8);
  std::vector<Point> points;
  points.reserve(notes.size());
  for (const auto& n : notes) points.push_back({std::llround(static_cast<double>(n.onset) / grid), n.pitch});
  return points;
}

double compression_ratio(std::span<const midi::NoteEvent> notes, int ppq, Execution execution) {
  if (notes.empty()) throw std::invalid_argument("compression ratio of an empty note list");
  return cosiatec(notes_to_points(notes, ppq), execution).compression_ratio();
}

}  // namespace inferalign::eval
