#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "inferalign/backends/wire.hpp"
#include "inferalign/cli/manifest.hpp"
#include "inferalign/eval/metrics.hpp"

namespace inferalign::cli {

// Commands return a process exit code and report failures on `err` as one
// JSON object: {"error":{"kind":...,"message":...,"violations":[...]}}.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Seed of caption `index` in a multi-caption run.
std::uint64_t caption_seed(std::uint64_t seed, std::size_t index);
/// "000.mid", "001.mid", ...
std::string numbered(std::size_t index, const std::string& extension);

/// Runs the search for every caption. One caption writes manifest.out and
/// manifest.report; several treat manifest.out as a directory of numbered
/// files and write one report holding every run.
int cmd_generate(const RunManifest& manifest, std::ostream& err);

struct AblationGrid {
  std::vector<int> m_values;  // swept at the manifest's T
  std::vector<int> T_values;  // swept at the manifest's m
  bool empty() const { return m_values.empty() && T_values.empty(); }
};

struct AblationCell {
  std::string parameter;  // "m" or "T"
  int value = 0;
  std::string directory;
  eval::CorpusAggregate aggregate;
  std::vector<std::string> failures;
};

struct AblationTable {
  std::string parameter;
  std::vector<AblationCell> cells;
};

/// Rows TB/TBT/CK/CKD (%), one column per grid value.
std::string to_csv(const AblationTable& table);
nlohmann::json to_json(const std::vector<AblationTable>& tables);

/// Runs every (caption, grid value) search and evaluates each cell against
/// the references. Per-caption failures are recorded on their cell.
std::vector<AblationTable> run_ablation(const RunManifest& manifest, const AblationGrid& grid,
                                        const std::string& references_dir, const std::string& out_dir);

/// Writes ablation_<parameter>.csv per swept parameter plus ablation.json
/// under out_dir. Nonzero when any cell recorded a failure.
int cmd_ablate(const RunManifest& manifest, const AblationGrid& grid, const std::string& references_dir,
               const std::string& out_dir, std::ostream& err);

struct EvalOptions {
  std::string generated_dir;
  std::string reference_dir;
  std::optional<std::string> scorer;  // endpoint; adds the CLAP column
  bool compression = true;
  std::string csv = "eval.csv";
  std::string json = "eval.json";
  int jobs = 1;
  int timeout_ms = 30'000;
};

int cmd_eval(const EvalOptions& options, std::ostream& err);

/// Answers newline-delimited requests until EOF.
int serve_stdio(backends::WireServer& server, std::istream& in, std::ostream& out);
int serve_http(backends::WireServer& server, const std::string& host, int port, std::ostream& err);

/// Machine-readable error object written by the commands.
nlohmann::json error_json(const std::string& kind, const std::string& message,
                          const std::vector<std::string>& violations = {});

}  // namespace inferalign::cli
