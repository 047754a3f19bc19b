#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "inferalign/midi/token.hpp"

namespace inferalign::backends {

struct GeneratorRequest {
  std::string caption;
  std::vector<midi::Token> prefix;
  int n_tokens = 1;
  std::uint64_t seed = 0;
};

struct MutationRequest {
  std::string caption;
  int count = 1;
  std::uint64_t seed = 0;
};

/// Base of every failure raised by a backend. Retriable failures are
/// transport-level; the caller may try the same request again.
class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& what, bool retriable) : std::runtime_error(what), retriable_(retriable) {}
  bool retriable() const noexcept { return retriable_; }

 private:
  bool retriable_;
};

/// Autoregressive model p(y_t | y_<t, x). Returns up to n_tokens new tokens
/// continuing `prefix`; fewer only when EOS was emitted.
class Generator {
 public:
  virtual ~Generator() = default;
  virtual std::vector<midi::Token> generate(const GeneratorRequest& request) = 0;
  /// False when calls must be serialized by the caller.
  virtual bool concurrent() const { return true; }
};

/// Produces `count` distinct variations of a caption.
class Mutator {
 public:
  virtual ~Mutator() = default;
  virtual std::vector<std::string> mutate(const MutationRequest& request) = 0;
  virtual bool concurrent() const { return true; }
};

/// Text/music similarity of a rendered SMF against a caption.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double score(std::span<const std::uint8_t> smf, std::string_view caption) = 0;
  virtual bool concurrent() const { return true; }
};

}  // namespace inferalign::backends
