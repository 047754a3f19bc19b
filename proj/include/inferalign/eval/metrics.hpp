#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "inferalign/backends/interfaces.hpp"
#include "inferalign/execution.hpp"
#include "inferalign/midi/features.hpp"

namespace inferalign::eval {

/// Lower edges of tempo bins 1..8; bin 0 is [0, 40) and bin 8 is [210, inf).
inline constexpr std::array<double, 8> kTempoBinEdges = {40, 60, 70, 90, 110, 140, 160, 210};

/// Half-open bin index of a tempo: an edge value belongs to the bin above it.
/// Throws std::invalid_argument for bpm <= 0 or non-finite bpm.
int tempo_bin(double bpm);

struct TempoMatch {
  bool tb = false;   // same bin
  bool tbt = false;  // same or adjacent bin
};
TempoMatch tb_tbt(double generated_bpm, double reference_bpm);

struct KeyMatch {
  bool ck = false;   // identical tonic and mode
  bool ckd = false;  // identical or relative major/minor
};
KeyMatch ck_ckd(const midi::Key& generated, const midi::Key& reference);

struct FileMetrics {
  std::size_t notes = 0;
  std::optional<double> tempo;
  std::optional<midi::Key> key;
  std::optional<double> compression_ratio;
};

/// Metrics of one parsed file; features that cannot be extracted stay unset.
FileMetrics measure(const midi::ParsedSmf& smf, bool with_compression, Execution execution = Execution::Serial);

struct EvalRow {
  std::string name;
  FileMetrics generated;
  FileMetrics reference;
  TempoMatch tempo;
  KeyMatch key;
  std::optional<double> clap;
};

struct CorpusAggregate {
  std::size_t pairs = 0;
  double tb = 0, tbt = 0, ck = 0, ckd = 0;  // percentages
  std::optional<double> cr;                 // mean over generated files
  std::optional<double> clap;               // mean scorer score
};

struct CorpusReport {
  std::vector<EvalRow> rows;  // sorted by name
  CorpusAggregate aggregate;
  std::vector<std::string> warnings;
};

struct CorpusOptions {
  bool compression = true;
  // When set, every generated file with a sidecar caption (<stem>.txt next to
  // it) is scored against that caption.
  backends::Scorer* scorer = nullptr;
  Execution execution = Execution::Parallel;
};

/// Pairs *.mid files by name across the two directories and compares them.
/// Unmatched or unreadable files become warnings. Throws std::runtime_error
/// when either directory cannot be read.
CorpusReport evaluate_corpus(const std::string& generated_dir, const std::string& reference_dir,
                             const CorpusOptions& options = {});

CorpusAggregate aggregate(const std::vector<EvalRow>& rows);

std::string to_csv(const std::vector<EvalRow>& rows);
nlohmann::json to_json(const CorpusAggregate& aggregate);
nlohmann::json to_json(const CorpusReport& report);

}  // namespace inferalign::eval
