#pragma once

// Sweep plans: a chain template, swept axes and time grid, read from JSON.
//
//   {
//     "chain": {"n": 2, "g": 1.0, "J": 1.0, "eta": 0.2},
//     "sweep": [{"name": "g", "lo": 0.5, "hi": 1.5, "steps": 101}],
//     "times": {"lo": 0, "hi": 5, "steps": 51},       // or an explicit array
//     "partitions": ["1|2"],
//     "tol": 1e-9
//   }

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "epchain/chain_json.hpp"
#include "epchain/spectral_analysis.hpp"
#include "epchain/table.hpp"

namespace epchain {

inline constexpr std::array<std::string_view, 10> kAxisNames{"g",  "J",  "eta", "phi", "g1",
                                                             "g2", "J1", "J2",  "t",   "N"};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  int steps = 1;

  double at(std::size_t i) const {
    if (steps == 1) return lo;
    if (i + 1 == static_cast<std::size_t>(steps)) return hi;
    return lo + (hi - lo) * static_cast<double>(i) / (steps - 1);
  }

  std::vector<double> values() const {
    std::vector<double> out(static_cast<std::size_t>(steps));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i);
    return out;
  }
};

struct Axis {
  std::string name;
  Range range;
};

struct SweepPlan {
  ChainConfig chain;
  std::vector<Axis> axes;
  std::vector<double> times;
  std::vector<std::string> partitions;
  std::string output;
  OutputFormat format = OutputFormat::Csv;
  double tol = kDefaultRegionTol;
  unsigned threads = 1;
  nlohmann::json settings;  // effective config, command-specific keys included

  std::size_t cell_count() const {
    std::size_t n = 1;
    for (const auto& a : axes) n *= static_cast<std::size_t>(a.range.steps);
    return n;
  }

  /// Axis values of grid cell `idx`; the last axis varies fastest.
  std::vector<double> cell(std::size_t idx) const {
    std::vector<double> v(axes.size());
    for (std::size_t k = axes.size(); k-- > 0;) {
      const auto steps = static_cast<std::size_t>(axes[k].range.steps);
      v[k] = axes[k].range.at(idx % steps);
      idx /= steps;
    }
    return v;
  }
};

namespace detail {

inline double finite_number(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key) || !doc.at(key).is_number())
    throw Error(ErrorCode::ConfigError, std::string("missing numeric field '") + key + "'");
  const double v = doc.at(key).get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::ConfigError, std::string("'") + key + "' is not finite");
  return v;
}

}  // namespace detail

inline Range range_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::ConfigError, "range must be an object {lo, hi, steps}");
  Range r;
  r.lo = detail::finite_number(doc, "lo");
  r.hi = doc.contains("hi") ? detail::finite_number(doc, "hi") : r.lo;
  if (doc.contains("steps")) {
    if (!doc.at("steps").is_number_integer())
      throw Error(ErrorCode::ConfigError, "'steps' must be an integer");
    r.steps = doc.at("steps").get<int>();
  }
  if (r.steps < 1) throw Error(ErrorCode::ConfigError, "'steps' must be >= 1");
  return r;
}

inline nlohmann::json to_json(const Range& r) {
  return {{"lo", r.lo}, {"hi", r.hi}, {"steps", r.steps}};
}

/// Either an ascending array of numbers or a {lo, hi, steps} range.
inline std::vector<double> grid_from_json(const nlohmann::json& doc, const char* what) {
  if (doc.is_number()) return {detail::finite_number(nlohmann::json{{"v", doc}}, "v")};
  if (!doc.is_array()) return range_from_json(doc).values();
  std::vector<double> out;
  for (const auto& x : doc) {
    if (!x.is_number() || !std::isfinite(x.get<double>()))
      throw Error(ErrorCode::ConfigError, std::string("non-numeric entry in '") + what + "'");
    out.push_back(x.get<double>());
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, std::string("'") + what + "' is empty");
  if (!std::is_sorted(out.begin(), out.end()))
    throw Error(ErrorCode::UnsortedTimes, std::string("'") + what + "' must be ascending");
  return out;
}

inline Axis axis_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("name") || !doc.at("name").is_string())
    throw Error(ErrorCode::ConfigError, "sweep axis needs a string 'name'");
  Axis a{doc.at("name").get<std::string>(), range_from_json(doc)};
  if (std::find(kAxisNames.begin(), kAxisNames.end(), a.name) == kAxisNames.end())
    throw Error(ErrorCode::ConfigError, "unknown sweep axis '" + a.name + "'");
  return a;
}

/// Sets one named parameter on a chain record. Per-bond names (g1, J2, ...)
/// expand a scalar to a per-bond list first.
inline void apply_axis(ChainConfig& c, const std::string& name, double value) {
  auto set_bond = [&](ParamValue& p, std::size_t bond, const char* label) {
    const auto bonds = static_cast<std::size_t>(std::max(0, c.n - 1));
    if (bond >= bonds)
      throw Error(ErrorCode::ConfigError,
                  std::string("axis '") + label + "' needs at least " + std::to_string(bond + 2) + " modes");
    std::vector<double> v = detail::expand(p, bonds, label);
    v[bond] = value;
    p = std::move(v);
  };
  if (name == "g") c.g = value;
  else if (name == "J") c.J = value;
  else if (name == "eta") c.eta = value;
  else if (name == "phi") c.phi = value;
  else if (name == "g1") set_bond(c.g, 0, "g1");
  else if (name == "g2") set_bond(c.g, 1, "g2");
  else if (name == "J1") set_bond(c.J, 0, "J1");
  else if (name == "J2") set_bond(c.J, 1, "J2");
  else if (name == "N") {
    if (value != std::round(value) || value < 1)
      throw Error(ErrorCode::ConfigError, "axis 'N' takes positive integers");
    c.n = static_cast<int>(value);
  } else if (name != "t")
    throw Error(ErrorCode::ConfigError, "unknown sweep axis '" + name + "'");
}

/// Chain of one grid cell. N is applied first so per-bond axes see the final size.
inline ChainConfig chain_at(const SweepPlan& plan, const std::vector<double>& cell) {
  ChainConfig c = plan.chain;
  for (std::size_t k = 0; k < plan.axes.size(); ++k)
    if (plan.axes[k].name == "N") apply_axis(c, "N", cell[k]);
  for (std::size_t k = 0; k < plan.axes.size(); ++k)
    if (plan.axes[k].name != "N") apply_axis(c, plan.axes[k].name, cell[k]);
  return c;
}

/// Merges `user` over `defaults` (RFC 7386) and parses the result.
inline SweepPlan sweep_plan_from_json(const nlohmann::json& defaults, const nlohmann::json& user) {
  if (!user.is_null() && !user.is_object())
    throw Error(ErrorCode::ConfigError, "config must be a JSON object");
  nlohmann::json doc = defaults;
  if (!user.is_null()) doc.merge_patch(user);

  SweepPlan plan;
  if (!doc.contains("chain")) throw Error(ErrorCode::ConfigError, "config needs a 'chain' object");
  plan.chain = chain_config_from_json(doc.at("chain"));
  if (doc.contains("sweep")) {
    if (!doc.at("sweep").is_array()) throw Error(ErrorCode::ConfigError, "'sweep' must be an array");
    for (const auto& a : doc.at("sweep")) {
      plan.axes.push_back(axis_from_json(a));
      for (std::size_t k = 0; k + 1 < plan.axes.size(); ++k)
        if (plan.axes[k].name == plan.axes.back().name)
          throw Error(ErrorCode::ConfigError, "axis '" + plan.axes.back().name + "' given twice");
    }
  }
  if (doc.contains("times")) plan.times = grid_from_json(doc.at("times"), "times");
  if (doc.contains("partitions")) {
    for (const auto& p : doc.at("partitions")) {
      if (!p.is_string()) throw Error(ErrorCode::ConfigError, "partitions must be strings");
      plan.partitions.push_back(p.get<std::string>());
    }
  }
  if (doc.contains("tol")) {
    plan.tol = detail::finite_number(doc, "tol");
    if (plan.tol <= 0) throw Error(ErrorCode::ConfigError, "'tol' must be positive");
  }
  // Validate the template once so config mistakes surface before any work.
  build_chain_spec(chain_at(plan, plan.cell(0)));
  plan.settings = std::move(doc);
  return plan;
}

inline nlohmann::json to_json(const SweepPlan& plan) {
  nlohmann::json doc = plan.settings;
  doc["chain"] = to_json(plan.chain);
  nlohmann::json axes = nlohmann::json::array();
  for (const auto& a : plan.axes) {
    auto j = to_json(a.range);
    j["name"] = a.name;
    axes.push_back(std::move(j));
  }
  doc["sweep"] = std::move(axes);
  doc["times"] = plan.times;
  doc["partitions"] = plan.partitions;
  doc["tol"] = plan.tol;
  doc["format"] = extension(plan.format);
  return doc;
}

}  // namespace epchain
