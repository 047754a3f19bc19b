// inferalign: reward-guided tree search over a text-to-MIDI generator.
//
//   inferalign generate --caption "A calm piece in D minor at 70 bpm" --seed 7
//   inferalign ablate --captions-file caps.txt --references refs/ --grid-m 100,500,1000,2000
//   inferalign eval generated/ references/ --with-scorer builtin
//   inferalign serve [--http 8080]
//
// Settings resolve as: defaults, then --config file, then INFERALIGN_* env
// vars, then flags.

#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "inferalign/cli/commands.hpp"

using namespace inferalign;

namespace {

struct RunFlags {
  std::optional<std::string> config;
  std::optional<std::string> caption, captions_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> m, T, Z, tau, k, max_tokens, jobs, retries, timeout_ms;
  std::optional<double> alpha, beta, off_key_rate;
  std::optional<std::string> generator, mutator, scorer, out, report;

  void attach(CLI::App& app) {
    auto opt = [&](const std::string& flag, auto& target, const std::string& help) {
      std::string env = "INFERALIGN_";
      for (const char c : flag.substr(2)) env += c == '-' ? '_' : static_cast<char>(std::toupper(c));
      app.add_option(flag, target, help)->envname(env);
    };
    opt("--config", config, "JSON run manifest");
    opt("--caption", caption, "caption to align to");
    opt("--captions-file", captions_file, "one caption per line");
    opt("--seed", seed, "master seed");
    opt("--m", m, "replacement period in tokens");
    opt("--T", T, "mutations per cycle (beams)");
    opt("--Z", Z, "mutation cycles");
    opt("--tau", tau, "replacement cycles per mutation cycle");
    opt("--k", k, "states kept at each replacement");
    opt("--alpha", alpha, "weight of text/music consistency");
    opt("--beta", beta, "weight of harmonic consistency");
    opt("--max-tokens", max_tokens, "token budget N");
    opt("--generator", generator, "builtin | cmd:<command> | http://host:port");
    opt("--mutator", mutator, "builtin | cmd:<command> | http://host:port");
    opt("--scorer", scorer, "builtin | cmd:<command> | http://host:port");
    opt("--out", out, "output MIDI file (directory for several captions)");
    opt("--report", report, "output JSON report");
    opt("--jobs", jobs, "worker threads");
    opt("--retries", retries, "extra attempts per backend call");
    opt("--timeout-ms", timeout_ms, "backend call timeout");
    opt("--off-key-rate", off_key_rate, "builtin generator off-key probability");
  }

  cli::RunManifest resolve() const {
    cli::RunManifest mf = config ? cli::load_manifest(*config) : cli::RunManifest{};
    auto set = [](auto& field, const auto& value) {
      if (value) field = *value;
    };
    if (caption) mf.caption = caption;
    if (captions_file) mf.captions_file = captions_file;
    set(mf.config.seed, seed);
    set(mf.config.m, m);
    set(mf.config.T, T);
    set(mf.config.Z, Z);
    if (tau) mf.config.tau = tau;
    if (k) mf.config.k = k;
    set(mf.config.alpha, alpha);
    set(mf.config.beta, beta);
    set(mf.config.max_tokens, max_tokens);
    set(mf.config.retries, retries);
    set(mf.generator, generator);
    set(mf.mutator, mutator);
    set(mf.scorer, scorer);
    set(mf.out, out);
    set(mf.report, report);
    set(mf.jobs, jobs);
    set(mf.timeout_ms, timeout_ms);
    set(mf.off_key_rate, off_key_rate);
    return mf;
  }
};

std::vector<int> parse_grid(const std::string& text) {
  std::vector<int> values;
  std::size_t start = 0;
  while (start <= text.size() && !text.empty()) {
    const auto comma = text.find(',', start);
    values.push_back(std::stoi(text.substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

int with_manifest(const RunFlags& flags, auto&& body) {
  try {
    return body(flags.resolve());
  } catch (const cli::ConfigError& e) {
    std::cerr << cli::error_json("config", e.what(), e.violations()).dump() << '\n';
    return cli::kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("inferalign"));
  if (const char* level = std::getenv("INFERALIGN_LOG")) spdlog::set_level(spdlog::level::from_str(level));

  CLI::App app{"Inference-time alignment for text-to-MIDI generation"};
  app.require_subcommand(1);

  RunFlags gen_flags;
  auto* generate = app.add_subcommand("generate", "align one or more captions and write MIDI plus a report");
  gen_flags.attach(*generate);

  RunFlags ablate_flags;
  std::string grid_m, grid_T, references, out_dir = "ablation";
  auto* ablate = app.add_subcommand("ablate", "sweep m and/or T and tabulate TB/TBT/CK/CKD");
  ablate_flags.attach(*ablate);
  ablate->add_option("--grid-m", grid_m, "comma-separated m values")->envname("INFERALIGN_GRID_M");
  ablate->add_option("--grid-T", grid_T, "comma-separated T values")->envname("INFERALIGN_GRID_T");
  ablate->add_option("--references", references, "reference MIDI directory (NNN.mid per caption)")
      ->envname("INFERALIGN_REFERENCES")
      ->required();
  ablate->add_option("--out-dir", out_dir, "output directory")->envname("INFERALIGN_OUT_DIR");

  cli::EvalOptions eval_options;
  std::optional<std::string> eval_scorer;
  bool no_cr = false;
  auto* eval = app.add_subcommand("eval", "compare generated MIDI against references");
  eval->add_option("generated", eval_options.generated_dir)->required();
  eval->add_option("references", eval_options.reference_dir)->required();
  eval->add_option("--with-scorer", eval_scorer, "score <name>.txt captions: builtin | cmd:... | http://...")
      ->envname("INFERALIGN_WITH_SCORER");
  eval->add_flag("--no-cr", no_cr, "skip compression ratio")->envname("INFERALIGN_NO_CR");
  eval->add_option("--csv", eval_options.csv, "per-file CSV output")->envname("INFERALIGN_CSV");
  eval->add_option("--json", eval_options.json, "aggregate JSON output")->envname("INFERALIGN_JSON");
  eval->add_option("--jobs", eval_options.jobs, "worker threads")->envname("INFERALIGN_JOBS");

  std::optional<int> http_port;
  std::string http_host = "127.0.0.1";
  double serve_off_key = 0.15;
  auto* serve = app.add_subcommand("serve", "expose the builtin backends over the wire protocol");
  serve->add_option("--http", http_port, "listen on this port instead of stdio")->envname("INFERALIGN_HTTP");
  serve->add_option("--host", http_host, "HTTP bind address")->envname("INFERALIGN_HOST");
  serve->add_option("--off-key-rate", serve_off_key, "builtin generator off-key probability")
      ->envname("INFERALIGN_OFF_KEY_RATE");

  CLI11_PARSE(app, argc, argv);

  if (*generate) {
    return with_manifest(gen_flags, [](const cli::RunManifest& m) { return cli::cmd_generate(m, std::cerr); });
  }
  if (*ablate) {
    cli::AblationGrid grid;
    try {
      grid.m_values = parse_grid(grid_m);
      grid.T_values = parse_grid(grid_T);
    } catch (const std::exception&) {
      std::cerr << cli::error_json("config", "grid values must be comma-separated integers").dump() << '\n';
      return cli::kExitConfig;
    }
    return with_manifest(ablate_flags, [&](const cli::RunManifest& m) {
      return cli::cmd_ablate(m, grid, references, out_dir, std::cerr);
    });
  }
  if (*eval) {
    eval_options.scorer = eval_scorer;
    eval_options.compression = !no_cr;
    return cli::cmd_eval(eval_options, std::cerr);
  }
  backends::ToyGeneratorOptions options;
  options.off_key_rate = serve_off_key;
  backends::BuiltinServer builtin(options);
  if (http_port) return cli::serve_http(builtin.server, http_host, *http_port, std::cerr);
  std::ios::sync_with_stdio(false);
  return cli::serve_stdio(builtin.server, std::cin, std::cout);
}
