#include "inferalign/search/config.hpp"

#include <cmath>

namespace inferalign::search {

int SearchConfig::effective_tau() const {
  if (tau) return *tau;
  return m > 0 ? max_tokens / m + 1 : 2;
}

int SearchConfig::effective_k() const {
  if (k) return *k;
  return std::max(1, (T + 1) / 2 - 1);
}

std::vector<std::string> validate(const SearchConfig& c) {
  std::vector<std::string> errors;
  auto require = [&](bool ok, std::string message) {
    if (!ok) errors.push_back(std::move(message));
  };
  const int tau = c.effective_tau();
  const int k = c.effective_k();

  require(c.m >= 1, "m must be >= 1 (got " + std::to_string(c.m) + ")");
  require(c.T >= 1, "T must be >= 1 (got " + std::to_string(c.T) + ")");
  require(c.Z >= 1, "Z must be >= 1 (got " + std::to_string(c.Z) + ")");
  require(tau >= 2, "tau must be >= 2 (got " + std::to_string(tau) + ")");
  require(c.max_tokens >= 1, "max_tokens must be >= 1 (got " + std::to_string(c.max_tokens) + ")");
  require(k >= 1, "k must be >= 1 (got " + std::to_string(k) + ")");
  if (c.T > 1) require(k < c.T, "k must be < T (got k=" + std::to_string(k) + ", T=" + std::to_string(c.T) + ")");
  if (c.m >= 1 && tau >= 2) {
    require(static_cast<long long>(c.m) * (tau - 1) <= c.max_tokens,
            "m * (tau - 1) must be <= max_tokens (got " + std::to_string(c.m) + " * " + std::to_string(tau - 1) +
                " > " + std::to_string(c.max_tokens) + ")");
  }
  require(std::isfinite(c.alpha), "alpha must be finite");
  require(std::isfinite(c.beta), "beta must be finite");
  require(c.retries >= 0, "retries must be >= 0 (got " + std::to_string(c.retries) + ")");
  require(c.ppq >= 1 && c.ppq <= 0x7FFF, "ppq must be in [1, 32767]");
  return errors;
}

void to_json(nlohmann::json& j, const SearchConfig& c) {
  j = {{"m", c.m},         {"T", c.T},         {"Z", c.Z},
       {"alpha", c.alpha}, {"beta", c.beta},   {"max_tokens", c.max_tokens},
       {"seed", c.seed},   {"retries", c.retries}, {"ppq", c.ppq}};
  j["tau"] = c.tau ? nlohmann::json(*c.tau) : nlohmann::json(nullptr);
  j["k"] = c.k ? nlohmann::json(*c.k) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, SearchConfig& c) {
  auto opt_int = [&](const char* name, std::optional<int>& out) {
    if (!j.contains(name)) return;
    if (j[name].is_null()) out.reset();
    else out = j[name].get<int>();
  };
  c.m = j.value("m", c.m);
  c.T = j.value("T", c.T);
  c.Z = j.value("Z", c.Z);
  opt_int("tau", c.tau);
  opt_int("k", c.k);
  c.alpha = j.value("alpha", c.alpha);
  c.beta = j.value("beta", c.beta);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  c.seed = j.value("seed", c.seed);
  c.retries = j.value("retries", c.retries);
  c.ppq = j.value("ppq", c.ppq);
}

}  // namespace inferalign::search
