#include "inferalign/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>

#include "inferalign/eval/cosiatec.hpp"

namespace inferalign::eval {

namespace fs = std::filesystem;

namespace {

std::set<std::string> midi_names(const std::string& dir) {
  std::error_code ec;
  fs::directory_iterator it(dir, ec);
  if (ec) throw std::runtime_error("cannot read directory " + dir + ": " + ec.message());
  std::set<std::string> names;
  for (const auto& entry : it) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".mid" || ext == ".midi" || ext == ".MID") names.insert(entry.path().filename().string());
  }
  return names;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string opt(const std::optional<double>& v, int digits = 6) { return v ? fixed(*v, digits) : ""; }

std::string opt(const std::optional<midi::Key>& k) { return k ? midi::to_string(*k) : ""; }

double percent(std::size_t hits, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

int tempo_bin(double bpm) {
  if (!(bpm > 0) || !std::isfinite(bpm)) throw std::invalid_argument("tempo must be a positive finite bpm");
  return static_cast<int>(std::upper_bound(kTempoBinEdges.begin(), kTempoBinEdges.end(), bpm) - kTempoBinEdges.begin());
}

TempoMatch tb_tbt(double generated_bpm, double reference_bpm) {
  const int g = tempo_bin(generated_bpm);
  const int r = tempo_bin(reference_bpm);
  return {g == r, std::abs(g - r) <= 1};
}

KeyMatch ck_ckd(const midi::Key& generated, const midi::Key& reference) {
  const bool exact = generated == reference;
  return {exact, exact || midi::relative_key(generated) == reference};
}

FileMetrics measure(const midi::ParsedSmf& smf, bool with_compression, Execution execution) {
  FileMetrics m;
  m.notes = smf.notes.size();
  try {
    m.tempo = midi::extract_tempo(smf);
  } catch (const midi::FeatureError&) {
  }
  if (!smf.notes.empty()) {
    m.key = midi::estimate_key(smf.notes);
    if (with_compression) m.compression_ratio = compression_ratio(smf.notes, smf.ppq, execution);
  }
  return m;
}

CorpusAggregate aggregate(const std::vector<EvalRow>& rows) {
  CorpusAggregate agg;
  agg.pairs = rows.size();
  std::size_t tb = 0, tbt = 0, ck = 0, ckd = 0;
  double cr_sum = 0, clap_sum = 0;
  std::size_t cr_n = 0, clap_n = 0;
  for (const auto& r : rows) {
    tb += r.tempo.tb;
    tbt += r.tempo.tbt;
    ck += r.key.ck;
    ckd += r.key.ckd;
    if (r.generated.compression_ratio) {
      cr_sum += *r.generated.compression_ratio;
      ++cr_n;
    }
    if (r.clap) {
      clap_sum += *r.clap;
      ++clap_n;
    }
  }
  agg.tb = percent(tb, rows.size());
  agg.tbt = percent(tbt, rows.size());
  agg.ck = percent(ck, rows.size());
  agg.ckd = percent(ckd, rows.size());
  if (cr_n) agg.cr = cr_sum / static_cast<double>(cr_n);
  if (clap_n) agg.clap = clap_sum / static_cast<double>(clap_n);
  return agg;
}

CorpusReport evaluate_corpus(const std::string& generated_dir, const std::string& reference_dir,
                             const CorpusOptions& options) {
  const auto generated = midi_names(generated_dir);
  const auto reference = midi_names(reference_dir);

  CorpusReport report;
  std::vector<std::string> names;
  for (const auto& n : generated) {
    if (reference.count(n)) names.push_back(n);
    else report.warnings.push_back("no reference for " + n);
  }
  for (const auto& n : reference) {
    if (!generated.count(n)) report.warnings.push_back("no generated file for " + n);
  }
  if (names.empty()) report.warnings.push_back("no matching file names between " + generated_dir + " and " + reference_dir);

  std::vector<std::optional<EvalRow>> rows(names.size());
  std::vector<std::string> failures(names.size());
  std::mutex scorer_mutex;
  const bool serial_scorer = options.scorer && !options.scorer->concurrent();
  const long n = static_cast<long>(names.size());

  // Rows are independent; the parallel path splits them across threads and
  // each row's compression ratio runs serially inside its thread.
#pragma omp parallel for schedule(dynamic, 1) if (options.execution == Execution::Parallel)
  for (long i = 0; i < n; ++i) {
    const auto& name = names[i];
    try {
      const auto gen_bytes = midi::read_file((fs::path(generated_dir) / name).string());
      const auto ref_bytes = midi::read_file((fs::path(reference_dir) / name).string());
      const auto gen = midi::parse_smf(gen_bytes);
      const auto ref = midi::parse_smf(ref_bytes);

      EvalRow row;
      row.name = name;
      row.generated = measure(gen, options.compression);
      row.reference = measure(ref, options.compression);
      if (row.generated.tempo && row.reference.tempo) row.tempo = tb_tbt(*row.generated.tempo, *row.reference.tempo);
      if (row.generated.key && row.reference.key) row.key = ck_ckd(*row.generated.key, *row.reference.key);

      if (options.scorer) {
        const auto sidecar = (fs::path(generated_dir) / name).replace_extension(".txt");
        if (std::ifstream caption_file(sidecar); caption_file) {
          std::stringstream buf;
          buf << caption_file.rdbuf();
          std::string caption = buf.str();
          while (!caption.empty() && (caption.back() == '\n' || caption.back() == '\r')) caption.pop_back();
          if (serial_scorer) {
            std::lock_guard lock(scorer_mutex);
            row.clap = options.scorer->score(gen_bytes, caption);
          } else {
            row.clap = options.scorer->score(gen_bytes, caption);
          }
        }
      }
      rows[i] = std::move(row);
    } catch (const std::exception& e) {
      failures[i] = name + ": " + e.what();
    }
  }

  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i]) report.rows.push_back(std::move(*rows[i]));
    else report.warnings.push_back("skipped " + failures[i]);
  }
  report.aggregate = aggregate(report.rows);
  return report;
}

std::string to_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << "name,gen_tempo,gen_key,gen_cr,ref_tempo,ref_key,ref_cr,tb,tbt,ck,ckd,clap\n";
  for (const auto& r : rows) {
    out << r.name << ',' << opt(r.generated.tempo, 3) << ',' << opt(r.generated.key) << ','
        << opt(r.generated.compression_ratio) << ',' << opt(r.reference.tempo, 3) << ',' << opt(r.reference.key)
        << ',' << opt(r.reference.compression_ratio) << ',' << r.tempo.tb << ',' << r.tempo.tbt << ',' << r.key.ck
        << ',' << r.key.ckd << ',' << opt(r.clap) << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const CorpusAggregate& agg) {
  auto maybe = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"pairs", agg.pairs}, {"CR", maybe(agg.cr)}, {"CLAP", maybe(agg.clap)}, {"TB", agg.tb},
          {"TBT", agg.tbt},     {"CK", agg.ck},        {"CKD", agg.ckd}};
}

nlohmann::json to_json(const CorpusReport& report) {
  return {{"aggregate", to_json(report.aggregate)}, {"warnings", report.warnings}};
}

}  // namespace inferalign::eval
