#pragma once

// JSON form of a chain: {"n": int, "g": num|array, "phi": num|array, "J": num|array, "eta": num|array}.

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "epchain/chain_model.hpp"

namespace epchain {

namespace detail {

inline ParamValue param_from_json(const nlohmann::json& doc, const char* key, double fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_array()) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
      if (!x.is_number())
        throw Error(ErrorCode::ConfigError, std::string("non-numeric entry in '") + key + "'");
      out.push_back(x.get<double>());
    }
    return out;
  }
  throw Error(ErrorCode::ConfigError, std::string("'") + key + "' must be a number or array");
}

inline nlohmann::json param_to_json(const ParamValue& v) {
  if (const double* s = std::get_if<double>(&v)) return *s;
  return std::get<std::vector<double>>(v);
}

}  // namespace detail

inline ChainConfig chain_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::ConfigError, "chain config must be a JSON object");
  if (!doc.contains("n") || !doc.at("n").is_number_integer())
    throw Error(ErrorCode::ConfigError, "chain config needs integer field 'n'");
  ChainConfig config;
  config.n = doc.at("n").get<int>();
  config.g = detail::param_from_json(doc, "g", 0.0);
  config.phi = detail::param_from_json(doc, "phi", 0.0);
  config.J = detail::param_from_json(doc, "J", 0.0);
  config.eta = detail::param_from_json(doc, "eta", 0.0);
  return config;
}

inline nlohmann::json to_json(const ChainConfig& config) {
  return nlohmann::json{{"n", config.n},
                        {"g", detail::param_to_json(config.g)},
                        {"phi", detail::param_to_json(config.phi)},
                        {"J", detail::param_to_json(config.J)},
                        {"eta", detail::param_to_json(config.eta)}};
}

/// Serializes a validated spec with per-bond arrays. Complex eta has no JSON form.
inline nlohmann::json to_json(const ChainSpec& spec) {
  std::vector<double> g, phi, eta;
  for (const cplx& h : spec.hopping()) {
    g.push_back(std::abs(h));
    phi.push_back(std::arg(h));
  }
  for (const cplx& e : spec.sms()) {
    if (e.imag() != 0.0)
      throw Error(ErrorCode::ConfigError, "complex single-mode squeezing has no JSON form");
    eta.push_back(e.real());
  }
  return nlohmann::json{
      {"n", spec.n_modes()}, {"g", g}, {"phi", phi}, {"J", spec.pairing()}, {"eta", eta}};
}

inline ChainSpec chain_spec_from_json(const nlohmann::json& doc) {
  return build_chain_spec(chain_config_from_json(doc));
}

}  // namespace epchain
