#include "inferalign/cli/commands.hpp"

#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <spdlog/spdlog.h>

#include "inferalign/backends/http_server.hpp"
#include "inferalign/backends/seed.hpp"
#include "inferalign/midi/smf.hpp"
#include "inferalign/search/search.hpp"

namespace inferalign::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

int fail(std::ostream& err, int code, const std::string& kind, const std::string& message,
         const std::vector<std::string>& violations = {}) {
  err << backends::dump_lenient(error_json(kind, message, violations)) << '\n';
  return code;
}

struct GeneratedRun {
  search::SearchReport report;
  std::vector<std::uint8_t> smf;
};

GeneratedRun generate_one(const std::string& caption, search::SearchConfig config, search::Backends backends,
                          Execution execution) {
  auto report = search::run_inferalign(caption, config, backends, execution);
  auto smf = search::render_state(report.best_state, config.ppq);
  return {std::move(report), std::move(smf)};
}

std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

nlohmann::json error_json(const std::string& kind, const std::string& message,
                          const std::vector<std::string>& violations) {
  nlohmann::json e = {{"kind", kind}, {"message", message}};
  if (!violations.empty()) e["violations"] = violations;
  return {{"error", e}};
}

std::uint64_t caption_seed(std::uint64_t seed, std::size_t index) { return backends::derive_seed(seed, {index}); }

std::string numbered(std::size_t index, const std::string& extension) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%03zu", index);
  return buf + extension;
}

int cmd_generate(const RunManifest& manifest, std::ostream& err) {
  if (auto violations = validate(manifest); !violations.empty()) {
    return fail(err, kExitConfig, "config", "invalid configuration", violations);
  }
  std::vector<std::string> captions;
  try {
    captions = load_captions(manifest);
  } catch (const ConfigError& e) {
    return fail(err, kExitConfig, "config", e.what(), e.violations());
  }
  if (captions.empty()) return fail(err, kExitConfig, "config", "invalid configuration", {"no captions to generate"});

  std::optional<BackendSet> set;
  try {
    set.emplace(manifest);
  } catch (const ConfigError& e) {
    return fail(err, kExitConfig, "backend", e.what(), e.violations());
  }
  omp_set_num_threads(manifest.jobs);

  try {
    if (captions.size() == 1) {
      const auto run = generate_one(captions.front(), manifest.config, set->view(), Execution::Parallel);
      spdlog::info("search finished in {:.2f}s, best composite {:.4f}", run.report.wall_time,
                   run.report.best_state.reward ? run.report.best_state.reward->composite : 0.0);
      midi::write_file(manifest.out, run.smf);
      write_text(manifest.report, search::to_json(run.report, false).dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n");
      return kExitOk;
    }

    fs::create_directories(manifest.out);
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t i = 0; i < captions.size(); ++i) {
      auto config = manifest.config;
      config.seed = caption_seed(manifest.config.seed, i);
      const auto run = generate_one(captions[i], config, set->view(), Execution::Parallel);
      const auto file = fs::path(manifest.out) / numbered(i, ".mid");
      midi::write_file(file.string(), run.smf);
      write_text(fs::path(manifest.out) / numbered(i, ".txt"), captions[i] + "\n");
      auto j = search::to_json(run.report, false);
      j["file"] = file.filename().string();
      runs.push_back(std::move(j));
    }
    write_text(manifest.report, nlohmann::json{{"runs", runs}}.dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n");
  } catch (const backends::BackendError& e) {
    return fail(err, kExitRuntime, "backend", e.what());
  } catch (const std::exception& e) {
    return fail(err, kExitRuntime, "io", e.what());
  }
  return kExitOk;
}

std::string to_csv(const AblationTable& table) {
  std::string out = table.parameter;
  for (const auto& c : table.cells) out += "," + std::to_string(c.value);
  out += '\n';
  const std::pair<const char*, double eval::CorpusAggregate::*> rows[] = {
      {"TB (%)", &eval::CorpusAggregate::tb},
      {"TBT (%)", &eval::CorpusAggregate::tbt},
      {"CK (%)", &eval::CorpusAggregate::ck},
      {"CKD (%)", &eval::CorpusAggregate::ckd}};
  for (const auto& [label, field] : rows) {
    out += label;
    for (const auto& c : table.cells) out += "," + format_percent(c.aggregate.*field);
    out += '\n';
  }
  return out;
}

nlohmann::json to_json(const std::vector<AblationTable>& tables) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : tables) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& c : t.cells) {
      cells.push_back({{"value", c.value},
                       {"directory", c.directory},
                       {"metrics", eval::to_json(c.aggregate)},
                       {"failures", c.failures}});
    }
    j.push_back({{"parameter", t.parameter}, {"cells", cells}});
  }
  return j;
}

std::vector<AblationTable> run_ablation(const RunManifest& manifest, const AblationGrid& grid,
                                        const std::string& references_dir, const std::string& out_dir) {
  if (grid.empty()) throw ConfigError({"ablation grid is empty"});
  const auto captions = load_captions(manifest);
  if (captions.empty()) throw ConfigError({"ablation needs at least one caption"});

  std::vector<AblationTable> tables;
  std::vector<std::pair<std::size_t, search::SearchConfig>> jobs;  // (table index, config) per cell
  auto add = [&](const std::string& parameter, const std::vector<int>& values, int search::SearchConfig::*field) {
    if (values.empty()) return;
    AblationTable table{parameter, {}};
    for (const int v : values) {
      auto config = manifest.config;
      config.*field = v;
      config.tau.reset();  // each cell uses its own default replacement schedule
      if (manifest.config.k && *manifest.config.k < config.T) config.k = manifest.config.k;
      else config.k.reset();
      std::vector<std::string> violations = search::validate(config);
      if (!violations.empty()) {
        for (auto& message : violations) message = parameter + "=" + std::to_string(v) + ": " + message;
        throw ConfigError(violations);
      }
      AblationCell cell;
      cell.parameter = parameter;
      cell.value = v;
      cell.directory = (fs::path(out_dir) / (parameter + std::to_string(v))).string();
      table.cells.push_back(cell);
      jobs.emplace_back(tables.size(), config);
    }
    tables.push_back(std::move(table));
  };
  add("m", grid.m_values, &search::SearchConfig::m);
  add("T", grid.T_values, &search::SearchConfig::T);

  BackendSet set(manifest);
  std::vector<AblationCell*> cells;
  for (auto& t : tables) {
    for (auto& c : t.cells) cells.push_back(&c);
  }

  // Cells are independent; with several jobs they run side by side and each
  // search uses its serial kernel.
  const Execution inner = manifest.jobs > 1 ? Execution::Serial : Execution::Parallel;
  const long n = static_cast<long>(cells.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(manifest.jobs) if (manifest.jobs > 1)
  for (long c = 0; c < n; ++c) {
    auto& cell = *cells[c];
    const auto& base = jobs[c].second;
    fs::create_directories(cell.directory);
    for (std::size_t i = 0; i < captions.size(); ++i) {
      try {
        auto config = base;
        config.seed = caption_seed(manifest.config.seed, i);
        const auto run = generate_one(captions[i], config, set.view(), inner);
        midi::write_file((fs::path(cell.directory) / numbered(i, ".mid")).string(), run.smf);
        write_text(fs::path(cell.directory) / numbered(i, ".txt"), captions[i] + "\n");
      } catch (const std::exception& e) {
        cell.failures.push_back(numbered(i, ".mid") + ": " + e.what());
      }
    }
    try {
      eval::CorpusOptions options;
      options.compression = false;
      options.execution = Execution::Serial;
      const auto report = eval::evaluate_corpus(cell.directory, references_dir, options);
      cell.aggregate = report.aggregate;
      for (const auto& w : report.warnings) cell.failures.push_back(w);
    } catch (const std::exception& e) {
      cell.failures.push_back(std::string("evaluation: ") + e.what());
    }
  }
  return tables;
}

int cmd_ablate(const RunManifest& manifest, const AblationGrid& grid, const std::string& references_dir,
               const std::string& out_dir, std::ostream& err) {
  auto violations = validate(manifest, true, false);
  if (grid.empty()) violations.push_back("ablation grid is empty (--grid-m and/or --grid-T)");
  if (!fs::is_directory(references_dir)) violations.push_back("references directory " + references_dir + " does not exist");
  if (!violations.empty()) return fail(err, kExitConfig, "config", "invalid configuration", violations);

  std::vector<AblationTable> tables;
  try {
    fs::create_directories(out_dir);
    tables = run_ablation(manifest, grid, references_dir, out_dir);
  } catch (const ConfigError& e) {
    return fail(err, kExitConfig, "config", e.what(), e.violations());
  } catch (const std::exception& e) {
    return fail(err, kExitRuntime, "io", e.what());
  }

  std::vector<std::string> failures;
  try {
    for (const auto& t : tables) {
      write_text(fs::path(out_dir) / ("ablation_" + t.parameter + ".csv"), to_csv(t));
      for (const auto& c : t.cells) {
        for (const auto& f : c.failures) failures.push_back(t.parameter + std::to_string(c.value) + ": " + f);
      }
    }
    write_text(fs::path(out_dir) / "ablation.json", to_json(tables).dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n");
  } catch (const std::exception& e) {
    return fail(err, kExitRuntime, "io", e.what());
  }
  if (!failures.empty()) return fail(err, kExitRuntime, "partial", "some ablation cells recorded failures", failures);
  return kExitOk;
}

int cmd_eval(const EvalOptions& options, std::ostream& err) {
  std::vector<std::string> violations;
  if (!fs::is_directory(options.generated_dir)) violations.push_back("generated directory " + options.generated_dir + " does not exist");
  if (!fs::is_directory(options.reference_dir)) violations.push_back("reference directory " + options.reference_dir + " does not exist");
  if (options.jobs < 1) violations.push_back("jobs must be >= 1");
  if (!violations.empty()) return fail(err, kExitConfig, "config", "invalid evaluation arguments", violations);

  std::unique_ptr<backends::Scorer> scorer;
  if (options.scorer) {
    try {
      scorer = make_scorer(*options.scorer, options.timeout_ms);
    } catch (const std::exception& e) {
      return fail(err, kExitConfig, "backend", std::string("scorer backend ") + *options.scorer + " unavailable: " + e.what());
    }
  }
  try {
    omp_set_num_threads(options.jobs);
    eval::CorpusOptions corpus;
    corpus.compression = options.compression;
    corpus.scorer = scorer.get();
    corpus.execution = options.jobs > 1 ? Execution::Parallel : Execution::Serial;
    const auto report = eval::evaluate_corpus(options.generated_dir, options.reference_dir, corpus);
    for (const auto& w : report.warnings) spdlog::warn("{}", w);
    write_text(options.csv, eval::to_csv(report.rows));
    write_text(options.json, eval::to_json(report).dump(2, ' ', false, nlohmann::json::error_handler_t::replace) + "\n");
  } catch (const std::exception& e) {
    return fail(err, kExitRuntime, "io", e.what());
  }
  return kExitOk;
}

int serve_stdio(backends::WireServer& server, std::istream& in, std::ostream& out) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    out << server.handle_line(line) << '\n' << std::flush;
  }
  return kExitOk;
}

int serve_http(backends::WireServer& server, const std::string& host, int port, std::ostream& err) {
  httplib::Server http;
  backends::mount_wire_routes(http, server);
  spdlog::info("serving wire protocol v{} on http://{}:{}", backends::kProtocolVersion, host, port);
  if (!http.listen(host, port)) return fail(err, kExitRuntime, "io", "cannot listen on " + host + ":" + std::to_string(port));
  return kExitOk;
}

}  // namespace inferalign::cli
