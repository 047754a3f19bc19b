#pragma once

// Wire protocol v1: one JSON object per request and per response, either as
// newline-delimited JSON over a subprocess's stdio or as HTTP POST bodies to
// /hello, /generate, /mutate and /score.
//
//   {"op":"hello"}                                   -> {"version":1,"concurrent":bool}
//   {"op":"generate","caption":s,"prefix":[tok..],
//    "n_tokens":n,"seed":u64}                        -> {"tokens":[tok..]}
//   {"op":"mutate","caption":s,"count":n,"seed":u64} -> {"captions":[s..]}
//   {"op":"score","caption":s,"smf_base64":b64}      -> {"score":x}
//
// Tokens travel in their text form (see midi::to_string). Failures come back
// as {"error":{"code":c,"message":m}}.

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include <json.hpp>

#include "inferalign/backends/builtin.hpp"
#include "inferalign/backends/interfaces.hpp"

namespace inferalign::backends {

using json = nlohmann::json;

inline constexpr int kProtocolVersion = 1;

class TimeoutError : public BackendError {
 public:
  explicit TimeoutError(const std::string& what) : BackendError(what, true) {}
};
class TransportError : public BackendError {
 public:
  explicit TransportError(const std::string& what) : BackendError(what, true) {}
};
class MalformedResponseError : public BackendError {
 public:
  explicit MalformedResponseError(const std::string& what) : BackendError(what, false) {}
};
class VersionMismatchError : public BackendError {
 public:
  explicit VersionMismatchError(const std::string& what) : BackendError(what, false) {}
};
/// The server answered with an error object.
class ProtocolError : public BackendError {
 public:
  ProtocolError(std::string code, const std::string& message)
      : BackendError(code + ": " + message, false), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws std::invalid_argument on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

json tokens_to_json(std::span<const midi::Token> tokens);
/// Throws std::invalid_argument naming the offending token.
std::vector<midi::Token> tokens_from_json(const json& array);

json make_generate_request(const GeneratorRequest& request);
json make_mutate_request(const MutationRequest& request);
json make_score_request(std::span<const std::uint8_t> smf, std::string_view caption);
json make_error(std::string_view code, std::string_view message);
/// Compact serialization that replaces invalid UTF-8 instead of throwing.
std::string dump_lenient(const json& value);

/// Server side of the protocol over arbitrary backends. Never throws: every
/// failure, including malformed requests, becomes an error response.
class WireServer {
 public:
  WireServer(Generator& generator, Mutator& mutator, Scorer& scorer, bool concurrent = true)
      : generator_(generator), mutator_(mutator), scorer_(scorer), concurrent_(concurrent) {}

  json handle(const json& request);
  /// Parses one line and serializes the response (compact, no trailing newline).
  std::string handle_line(std::string_view line);

 private:
  Generator& generator_;
  Mutator& mutator_;
  Scorer& scorer_;
  bool concurrent_;
};

/// Built-in backends bundled with a server, for `serve` and tests.
struct BuiltinServer {
  ToyGenerator generator;
  RuleMutator mutator;
  MockScorer scorer;
  WireServer server{generator, mutator, scorer};

  explicit BuiltinServer(ToyGeneratorOptions options = {}) : generator(options) {}
};

/// Moves one serialized request to a backend and returns its serialized reply.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string roundtrip(const std::string& op, const std::string& body,
                                std::chrono::milliseconds timeout) = 0;
  virtual bool supports_concurrency() const = 0;
  virtual std::string describe() const = 0;
};

/// Spawns `/bin/sh -c command` and exchanges newline-delimited JSON over its
/// stdin/stdout. Requests are serialized.
class SubprocessTransport final : public Transport {
 public:
  explicit SubprocessTransport(std::string command);
  ~SubprocessTransport() override;
  SubprocessTransport(const SubprocessTransport&) = delete;
  SubprocessTransport& operator=(const SubprocessTransport&) = delete;

  std::string roundtrip(const std::string& op, const std::string& body, std::chrono::milliseconds timeout) override;
  bool supports_concurrency() const override { return false; }
  std::string describe() const override { return "subprocess `" + command_ + "`"; }

 private:
  void spawn();
  void shutdown();

  std::string command_;
  std::mutex mutex_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

/// POSTs each request to <base_url>/<op>.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::string base_url);
  std::string roundtrip(const std::string& op, const std::string& body, std::chrono::milliseconds timeout) override;
  bool supports_concurrency() const override { return true; }
  std::string describe() const override { return "http " + base_url_; }

 private:
  std::string base_url_;
  std::string host_;
  std::string path_prefix_;
};

struct ClientOptions {
  std::chrono::milliseconds timeout{30'000};
  int retries = 2;  // extra attempts after the first, for retriable errors
};

/// Protocol client: framing, handshake, response validation and retries.
class WireClient {
 public:
  WireClient(std::unique_ptr<Transport> transport, ClientOptions options = {});

  /// Performs the handshake once; throws VersionMismatchError on a version other than 1.
  void connect();
  bool concurrent();

  /// Sends `request` (whose "op" selects the endpoint) and returns the
  /// validated response object. Retries retriable failures.
  json call(const json& request);

  const Transport& transport() const { return *transport_; }

 private:
  json call_once(const json& request);

  std::unique_ptr<Transport> transport_;
  ClientOptions options_;
  std::once_flag handshake_;
  bool concurrent_ = false;
};

/// Builds a transport from an endpoint string: "cmd:<shell command>" or an
/// http(s):// URL.
std::unique_ptr<Transport> make_transport(const std::string& endpoint);

class RemoteGenerator final : public Generator {
 public:
  explicit RemoteGenerator(std::shared_ptr<WireClient> client) : client_(std::move(client)) {}
  std::vector<midi::Token> generate(const GeneratorRequest& request) override;
  bool concurrent() const override { return client_->concurrent(); }

 private:
  std::shared_ptr<WireClient> client_;
};

class RemoteMutator final : public Mutator {
 public:
  explicit RemoteMutator(std::shared_ptr<WireClient> client) : client_(std::move(client)) {}
  std::vector<std::string> mutate(const MutationRequest& request) override;
  bool concurrent() const override { return client_->concurrent(); }

 private:
  std::shared_ptr<WireClient> client_;
};

class RemoteScorer final : public Scorer {
 public:
  explicit RemoteScorer(std::shared_ptr<WireClient> client) : client_(std::move(client)) {}
  double score(std::span<const std::uint8_t> smf, std::string_view caption) override;
  bool concurrent() const override { return client_->concurrent(); }

 private:
  std::shared_ptr<WireClient> client_;
};

/// Tries the primary mutator and falls back to the rule mutator when it fails.
class FallbackMutator final : public Mutator {
 public:
  explicit FallbackMutator(std::unique_ptr<Mutator> primary) : primary_(std::move(primary)) {}
  std::vector<std::string> mutate(const MutationRequest& request) override;
  std::size_t fallbacks() const { return fallbacks_; }

 private:
  std::unique_ptr<Mutator> primary_;
  RuleMutator fallback_;
  std::size_t fallbacks_ = 0;
};

}  // namespace inferalign::backends
