#pragma once

#include <compare>
#include <cstdint>
#include <span>
#include <vector>

#include "inferalign/execution.hpp"
#include "inferalign/midi/notes.hpp"

namespace inferalign::eval {

/// (onset, pitch) on an integer grid.
struct Point {
  std::int64_t x = 0;
  std::int64_t y = 0;

  friend auto operator<=>(const Point&, const Point&) = default;
  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
};

/// Translational equivalence class: a pattern with every vector that maps it
/// into the dataset. `pattern` is the lexicographically smallest occurrence,
/// so `translators` always starts at the zero vector.
struct Tec {
  std::vector<Point> pattern;
  std::vector<Point> translators;  // sorted, includes (0, 0)
  std::size_t coverage = 0;        // distinct points covered by all occurrences

  std::size_t cost() const { return pattern.size() + translators.size() - 1; }
  std::vector<Point> covered_points() const;
};

/// Sorted, de-duplicated copy.
std::vector<Point> normalize(std::span<const Point> points);

/// One TEC per translational class of maximal translatable patterns. Input
/// must be normalized.
std::vector<Tec> siatec_serial(std::span<const Point> dataset);
/// OpenMP variant of siatec_serial; identical output.
std::vector<Tec> siatec_parallel(std::span<const Point> dataset);

/// Greedy choice among TECs: highest coverage/cost, then larger coverage,
/// then lexicographically smallest pattern.
bool better_tec(const Tec& a, const Tec& b);

struct Cover {
  std::vector<Tec> tecs;  // in selection order
  std::size_t points = 0;

  std::size_t encoding_length() const;
  double compression_ratio() const;
};

/// COSIATEC: repeatedly runs SIATEC on the uncovered points, takes the best
/// TEC and removes what it covers, until nothing is left.
Cover cosiatec(std::span<const Point> points, Execution execution = Execution::Parallel);

/// Notes as points with onsets quantized to 1/32 notes (ppq / 8 ticks).
std::vector<Point> notes_to_points(std::span<const midi::NoteEvent> notes, int ppq = midi::kDefaultPpq);

/// |points| / encoding length of the COSIATEC cover. Throws
/// std::invalid_argument on an empty note list.
double compression_ratio(std::span<const midi::NoteEvent> notes, int ppq = midi::kDefaultPpq,
                         Execution execution = Execution::Parallel);

}  // namespace inferalign::eval
