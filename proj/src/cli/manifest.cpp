#include "inferalign/cli/manifest.hpp"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace inferalign::cli {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& i : items) out += (out.empty() ? "" : "; ") + i;
  return out;
}

bool endpoint_known(const std::string& e) {
  return e == "builtin" || e == "none" || e.rfind("cmd:", 0) == 0 || e.rfind("http://", 0) == 0 ||
         e.rfind("https://", 0) == 0;
}

bool writable_target(const std::string& path) {
  const fs::path p(path);
  const fs::path parent = p.has_parent_path() ? p.parent_path() : fs::path(".");
  std::error_code ec;
  if (!fs::is_directory(parent, ec)) return false;
  if (fs::exists(p, ec)) return ::access(p.c_str(), W_OK) == 0;
  return ::access(parent.c_str(), W_OK) == 0;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

void to_json(nlohmann::json& j, const RunManifest& m) {
  j = {{"config", m.config},
       {"generator", m.generator},
       {"mutator", m.mutator},
       {"scorer", m.scorer},
       {"out", m.out},
       {"report", m.report},
       {"jobs", m.jobs},
       {"off_key_rate", m.off_key_rate},
       {"timeout_ms", m.timeout_ms}};
  j["caption"] = m.caption ? nlohmann::json(*m.caption) : nlohmann::json(nullptr);
  j["captions_file"] = m.captions_file ? nlohmann::json(*m.captions_file) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, RunManifest& m) {
  if (j.contains("config")) m.config = j.at("config").get<search::SearchConfig>();
  m.generator = j.value("generator", m.generator);
  m.mutator = j.value("mutator", m.mutator);
  m.scorer = j.value("scorer", m.scorer);
  m.out = j.value("out", m.out);
  m.report = j.value("report", m.report);
  m.jobs = j.value("jobs", m.jobs);
  m.off_key_rate = j.value("off_key_rate", m.off_key_rate);
  m.timeout_ms = j.value("timeout_ms", m.timeout_ms);
  if (j.contains("caption") && !j["caption"].is_null()) m.caption = j["caption"].get<std::string>();
  if (j.contains("captions_file") && !j["captions_file"].is_null()) {
    m.captions_file = j["captions_file"].get<std::string>();
  }
}

RunManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path});
  try {
    return nlohmann::json::parse(in).get<RunManifest>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError({"invalid config file " + path + ": " + e.what()});
  }
}

void save_manifest(const RunManifest& manifest, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << nlohmann::json(manifest).dump(2) << '\n';
}

std::vector<std::string> load_captions(const RunManifest& manifest) {
  std::vector<std::string> captions;
  if (manifest.caption) captions.push_back(*manifest.caption);
  if (manifest.captions_file) {
    std::ifstream in(*manifest.captions_file);
    if (!in) throw ConfigError({"cannot read captions file " + *manifest.captions_file});
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty()) captions.push_back(line);
    }
  }
  return captions;
}

std::vector<std::string> validate(const RunManifest& m, bool require_caption, bool check_outputs) {
  auto errors = search::validate(m.config);
  for (const auto& [role, endpoint] : {std::pair{"generator", m.generator}, std::pair{"mutator", m.mutator},
                                       std::pair{"scorer", m.scorer}}) {
    if (endpoint == "none" || endpoint.empty()) {
      errors.push_back(std::string(role) + " backend is not configured (endpoint \"" + endpoint + "\")");
    } else if (!endpoint_known(endpoint)) {
      errors.push_back(std::string(role) + " endpoint \"" + endpoint + "\" is not builtin, cmd:<command> or http://");
    }
  }
  if (require_caption && !m.caption && !m.captions_file) errors.push_back("no caption given (--caption or --captions-file)");
  if (m.captions_file && !fs::is_regular_file(*m.captions_file)) {
    errors.push_back("captions file " + *m.captions_file + " does not exist");
  }
  if (m.jobs < 1) errors.push_back("jobs must be >= 1");
  if (!(m.off_key_rate >= 0.0 && m.off_key_rate <= 1.0)) errors.push_back("off_key_rate must be in [0, 1]");
  if (m.timeout_ms < 1) errors.push_back("timeout_ms must be >= 1");
  if (check_outputs) {
    if (!writable_target(m.out)) errors.push_back("output path " + m.out + " is not writable");
    if (!writable_target(m.report)) errors.push_back("report path " + m.report + " is not writable");
  }
  return errors;
}

std::shared_ptr<backends::WireClient> BackendSet::client_for(const std::string& endpoint, const RunManifest& manifest) {
  for (const auto& [e, client] : clients_) {
    if (e == endpoint) return client;
  }
  auto client = std::make_shared<backends::WireClient>(
      backends::make_transport(endpoint),
      backends::ClientOptions{std::chrono::milliseconds(manifest.timeout_ms), manifest.config.retries});
  client->connect();
  clients_.emplace_back(endpoint, client);
  return client;
}

BackendSet::BackendSet(const RunManifest& manifest) {
  std::vector<std::string> errors;
  auto attempt = [&](const char* role, const std::string& endpoint, auto&& build) {
    try {
      build();
    } catch (const std::exception& e) {
      errors.push_back(std::string(role) + " backend " + endpoint + " unavailable: " + e.what());
    }
  };
  for (const auto& [role, endpoint] : {std::pair{"generator", manifest.generator}, std::pair{"mutator", manifest.mutator},
                                       std::pair{"scorer", manifest.scorer}}) {
    if (endpoint == "none" || endpoint.empty()) {
      errors.push_back(std::string(role) + " backend is not configured (endpoint \"" + endpoint + "\")");
    }
  }
  if (!errors.empty()) throw ConfigError(errors);

  attempt("generator", manifest.generator, [&] {
    if (manifest.generator == "builtin") {
      backends::ToyGeneratorOptions options;
      options.off_key_rate = manifest.off_key_rate;
      options.ppq = manifest.config.ppq;
      generator_ = std::make_unique<backends::ToyGenerator>(options);
    } else {
      generator_ = std::make_unique<backends::RemoteGenerator>(client_for(manifest.generator, manifest));
    }
  });
  attempt("mutator", manifest.mutator, [&] {
    if (manifest.mutator == "builtin") {
      mutator_ = std::make_unique<backends::RuleMutator>();
    } else {
      mutator_ = std::make_unique<backends::FallbackMutator>(
          std::make_unique<backends::RemoteMutator>(client_for(manifest.mutator, manifest)));
    }
  });
  attempt("scorer", manifest.scorer, [&] {
    if (manifest.scorer == "builtin") scorer_ = std::make_unique<backends::MockScorer>();
    else scorer_ = std::make_unique<backends::RemoteScorer>(client_for(manifest.scorer, manifest));
  });
  if (!errors.empty()) throw ConfigError(errors);
}

std::unique_ptr<backends::Scorer> make_scorer(const std::string& endpoint, int timeout_ms, int retries) {
  if (endpoint == "builtin") return std::make_unique<backends::MockScorer>();
  auto client = std::make_shared<backends::WireClient>(
      backends::make_transport(endpoint), backends::ClientOptions{std::chrono::milliseconds(timeout_ms), retries});
  client->connect();
  return std::make_unique<backends::RemoteScorer>(client);
}

}  // namespace inferalign::cli
