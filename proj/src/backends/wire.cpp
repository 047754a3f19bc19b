#include "inferalign/backends/wire.hpp"

#include <array>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace inferalign::backends {

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

class RequestError : public std::runtime_error {
 public:
  RequestError(std::string code, const std::string& what) : std::runtime_error(what), code(std::move(code)) {}
  std::string code;
};

const json& field(const json& obj, const char* name) {
  const auto it = obj.find(name);
  if (it == obj.end()) throw RequestError("invalid_request", std::string("missing field \"") + name + "\"");
  return *it;
}

std::string string_field(const json& obj, const char* name) {
  const auto& v = field(obj, name);
  if (!v.is_string()) throw RequestError("invalid_request", std::string("field \"") + name + "\" must be a string");
  return v.get<std::string>();
}

std::int64_t int_field(const json& obj, const char* name) {
  const auto& v = field(obj, name);
  if (!v.is_number_integer()) throw RequestError("invalid_request", std::string("field \"") + name + "\" must be an integer");
  return v.get<std::int64_t>();
}

std::uint64_t seed_field(const json& obj) {
  const auto it = obj.find("seed");
  if (it == obj.end()) return 0;
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_number_integer()) return static_cast<std::uint64_t>(it->get<std::int64_t>());
  throw RequestError("invalid_request", "field \"seed\" must be an integer");
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t v = bytes[i] << 16;
    if (rest == 2) v |= bytes[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw std::invalid_argument("base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::array<int, 4> v{};
    int pad = 0;
    for (int j = 0; j < 4; ++j) {
      const char c = text[i + j];
      if (c == '=' && i + 4 == text.size() && j >= 2) {
        ++pad;
        v[j] = 0;
        continue;
      }
      if (pad > 0 || (v[j] = decode_char(c)) < 0) throw std::invalid_argument("invalid base64 character");
    }
    const std::uint32_t word = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back((word >> 16) & 0xFF);
    if (pad < 2) out.push_back((word >> 8) & 0xFF);
    if (pad < 1) out.push_back(word & 0xFF);
  }
  return out;
}

json tokens_to_json(std::span<const midi::Token> tokens) {
  json arr = json::array();
  for (const auto& t : tokens) arr.push_back(midi::to_string(t));
  return arr;
}

std::vector<midi::Token> tokens_from_json(const json& array) {
  if (!array.is_array()) throw std::invalid_argument("token list must be an array");
  std::vector<midi::Token> tokens;
  tokens.reserve(array.size());
  for (const auto& item : array) {
    if (!item.is_string()) throw std::invalid_argument("token must be a string: " + dump_lenient(item));
    const auto token = midi::token_from_string(item.get<std::string>());
    if (!token) throw std::invalid_argument("unknown token \"" + item.get<std::string>() + "\"");
    tokens.push_back(*token);
  }
  return tokens;
}

json make_generate_request(const GeneratorRequest& request) {
  return {{"op", "generate"},
          {"caption", request.caption},
          {"prefix", tokens_to_json(request.prefix)},
          {"n_tokens", request.n_tokens},
          {"seed", request.seed}};
}

json make_mutate_request(const MutationRequest& request) {
  return {{"op", "mutate"}, {"caption", request.caption}, {"count", request.count}, {"seed", request.seed}};
}

json make_score_request(std::span<const std::uint8_t> smf, std::string_view caption) {
  return {{"op", "score"}, {"caption", std::string(caption)}, {"smf_base64", base64_encode(smf)}};
}

json make_error(std::string_view code, std::string_view message) {
  return {{"error", {{"code", std::string(code)}, {"message", std::string(message)}}}};
}

std::string dump_lenient(const json& value) { return value.dump(-1, ' ', false, json::error_handler_t::replace); }

json WireServer::handle(const json& request) {
  try {
    if (!request.is_object()) throw RequestError("invalid_request", "request must be a JSON object");
    const std::string op = string_field(request, "op");

    if (op == "hello") return {{"version", kProtocolVersion}, {"concurrent", concurrent_}};

    if (op == "generate") {
      GeneratorRequest req;
      req.caption = string_field(request, "caption");
      const auto n = int_field(request, "n_tokens");
      if (n < 1) throw RequestError("invalid_request", "n_tokens must be >= 1");
      req.n_tokens = static_cast<int>(std::min<std::int64_t>(n, 1 << 20));
      req.seed = seed_field(request);
      if (request.contains("prefix")) {
        try {
          req.prefix = tokens_from_json(request.at("prefix"));
        } catch (const std::invalid_argument& e) {
          throw RequestError("invalid_token", e.what());
        }
      }
      return {{"tokens", tokens_to_json(generator_.generate(req))}};
    }

    if (op == "mutate") {
      MutationRequest req;
      req.caption = string_field(request, "caption");
      const auto count = int_field(request, "count");
      if (count < 1 || count > 1024) throw RequestError("invalid_request", "count must be in [1, 1024]");
      req.count = static_cast<int>(count);
      req.seed = seed_field(request);
      return {{"captions", mutator_.mutate(req)}};
    }

    if (op == "score") {
      const auto caption = string_field(request, "caption");
      std::vector<std::uint8_t> smf;
      try {
        smf = base64_decode(string_field(request, "smf_base64"));
      } catch (const std::invalid_argument& e) {
        throw RequestError("invalid_request", std::string("smf_base64: ") + e.what());
      }
      return {{"score", scorer_.score(smf, caption)}};
    }

    throw RequestError("unknown_op", "unknown op \"" + op + "\"");
  } catch (const RequestError& e) {
    return make_error(e.code, e.what());
  } catch (const std::exception& e) {
    return make_error("backend_error", e.what());
  }
}

std::string WireServer::handle_line(std::string_view line) {
  json request;
  try {
    request = json::parse(line);
  } catch (const json::parse_error& e) {
    return dump_lenient(make_error("parse_error", e.what()));
  }
  return dump_lenient(handle(request));
}

WireClient::WireClient(std::unique_ptr<Transport> transport, ClientOptions options)
    : transport_(std::move(transport)), options_(options) {}

void WireClient::connect() {
  std::call_once(handshake_, [this] {
    const json reply = call({{"op", "hello"}});
    const auto version = reply.find("version");
    if (version == reply.end() || !version->is_number_integer()) {
      throw MalformedResponseError("hello response lacks an integer \"version\"");
    }
    if (version->get<int>() != kProtocolVersion) {
      throw VersionMismatchError("backend speaks protocol version " + std::to_string(version->get<int>()) +
                                 ", expected " + std::to_string(kProtocolVersion));
    }
    const auto concurrent = reply.find("concurrent");
    concurrent_ = concurrent != reply.end() && concurrent->is_boolean() && concurrent->get<bool>() &&
                  transport_->supports_concurrency();
  });
}

bool WireClient::concurrent() {
  connect();
  return concurrent_;
}

json WireClient::call_once(const json& request) {
  const std::string op = request.at("op").get<std::string>();
  const std::string raw = transport_->roundtrip(op, dump_lenient(request), options_.timeout);
  json reply;
  try {
    reply = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw MalformedResponseError("unparseable response from " + transport_->describe() + ": " + e.what());
  }
  if (!reply.is_object()) throw MalformedResponseError("response is not a JSON object");
  if (const auto err = reply.find("error"); err != reply.end()) {
    const std::string code = err->is_object() && err->contains("code") && (*err)["code"].is_string()
                                 ? (*err)["code"].get<std::string>()
                                 : "unknown";
    const std::string message = err->is_object() && err->contains("message") && (*err)["message"].is_string()
                                    ? (*err)["message"].get<std::string>()
                                    : dump_lenient(*err);
    throw ProtocolError(code, message);
  }
  return reply;
}

json WireClient::call(const json& request) {
  for (int attempt = 0;; ++attempt) {
    try {
      return call_once(request);
    } catch (const BackendError& e) {
      if (!e.retriable() || attempt >= options_.retries) throw;
      spdlog::warn("{} failed ({}), retrying {}/{}", transport_->describe(), e.what(), attempt + 1,
                   options_.retries);
    }
  }
}

std::unique_ptr<Transport> make_transport(const std::string& endpoint) {
  if (endpoint.rfind("cmd:", 0) == 0) return std::make_unique<SubprocessTransport>(endpoint.substr(4));
  if (endpoint.rfind("http://", 0) == 0 || endpoint.rfind("https://", 0) == 0) {
    return std::make_unique<HttpTransport>(endpoint);
  }
  throw std::invalid_argument("unrecognized backend endpoint \"" + endpoint +
                              "\" (expected builtin, cmd:<command> or http://host:port)");
}

std::vector<midi::Token> RemoteGenerator::generate(const GeneratorRequest& request) {
  client_->connect();
  const json reply = client_->call(make_generate_request(request));
  const auto it = reply.find("tokens");
  if (it == reply.end()) throw MalformedResponseError("generate response lacks \"tokens\"");
  std::vector<midi::Token> tokens;
  try {
    tokens = tokens_from_json(*it);
  } catch (const std::invalid_argument& e) {
    throw MalformedResponseError(std::string("generate response: ") + e.what());
  }
  if (static_cast<int>(tokens.size()) > request.n_tokens) {
    throw MalformedResponseError("generate response has more tokens than requested");
  }
  return tokens;
}

std::vector<std::string> RemoteMutator::mutate(const MutationRequest& request) {
  client_->connect();
  const json reply = client_->call(make_mutate_request(request));
  const auto it = reply.find("captions");
  if (it == reply.end() || !it->is_array()) throw MalformedResponseError("mutate response lacks \"captions\"");
  std::vector<std::string> captions;
  for (const auto& c : *it) {
    if (!c.is_string()) throw MalformedResponseError("mutate response caption is not a string");
    captions.push_back(c.get<std::string>());
  }
  if (static_cast<int>(captions.size()) != request.count) {
    throw MalformedResponseError("mutate response has " + std::to_string(captions.size()) + " captions, expected " +
                                 std::to_string(request.count));
  }
  return captions;
}

double RemoteScorer::score(std::span<const std::uint8_t> smf, std::string_view caption) {
  client_->connect();
  const json reply = client_->call(make_score_request(smf, caption));
  const auto it = reply.find("score");
  if (it == reply.end() || !it->is_number()) throw MalformedResponseError("score response lacks a numeric \"score\"");
  return std::clamp(it->get<double>(), -1.0, 1.0);
}

std::vector<std::string> FallbackMutator::mutate(const MutationRequest& request) {
  try {
    return primary_->mutate(request);
  } catch (const std::exception& e) {
    ++fallbacks_;
    spdlog::warn("mutator failed ({}); falling back to the rule mutator", e.what());
    return fallback_.mutate(request);
  }
}

}  // namespace inferalign::backends
