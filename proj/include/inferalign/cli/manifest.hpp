#pragma once

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "inferalign/backends/builtin.hpp"
#include "inferalign/backends/wire.hpp"
#include "inferalign/search/search.hpp"

namespace inferalign::cli {

/// Raised with every violated constraint at once.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Everything a run needs. Only a caption source is required; the rest defaults.
///
/// Backend endpoints are "builtin", "none", "cmd:<shell command>" (JSON lines
/// over the child's stdio) or "http://host:port".
struct RunManifest {
  search::SearchConfig config;
  std::string generator = "builtin";
  std::string mutator = "builtin";
  std::string scorer = "builtin";
  std::optional<std::string> caption;
  std::optional<std::string> captions_file;
  std::string out = "out.mid";
  std::string report = "report.json";
  int jobs = 1;
  double off_key_rate = 0.15;  // toy generator epsilon
  int timeout_ms = 30'000;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

void to_json(nlohmann::json& j, const RunManifest& manifest);
void from_json(const nlohmann::json& j, RunManifest& manifest);

RunManifest load_manifest(const std::string& path);
void save_manifest(const RunManifest& manifest, const std::string& path);

/// Captions from the inline caption or the captions file (one per line,
/// blank lines skipped).
std::vector<std::string> load_captions(const RunManifest& manifest);

/// Every problem with the manifest: search-config constraints, backend
/// endpoints, caption source and, optionally, output writability.
std::vector<std::string> validate(const RunManifest& manifest, bool require_caption = true, bool check_outputs = true);

/// Concrete backends for a manifest. Remote endpoints that name the same
/// process or URL share one client. Construction performs the handshake so an
/// unreachable backend fails here rather than mid-search.
class BackendSet {
 public:
  explicit BackendSet(const RunManifest& manifest);
  search::Backends view() { return {*generator_, *mutator_, *scorer_}; }
  backends::Scorer& scorer() { return *scorer_; }

 private:
  std::shared_ptr<backends::WireClient> client_for(const std::string& endpoint, const RunManifest& manifest);

  std::vector<std::pair<std::string, std::shared_ptr<backends::WireClient>>> clients_;
  std::unique_ptr<backends::Generator> generator_;
  std::unique_ptr<backends::Mutator> mutator_;
  std::unique_ptr<backends::Scorer> scorer_;
};

/// A scorer for evaluation only: "builtin" or a remote endpoint.
std::unique_ptr<backends::Scorer> make_scorer(const std::string& endpoint, int timeout_ms = 30'000, int retries = 2);

}  // namespace inferalign::cli
