#pragma once

// Experiment drivers behind the command-line tool. Each command takes a
// SweepPlan and returns tables; the caller owns file output.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "epchain/entanglement.hpp"
#include "epchain/fitting.hpp"
#include "epchain/parallel.hpp"
#include "epchain/spectral_analysis.hpp"
#include "epchain/sweep.hpp"
#include "epchain/table.hpp"

namespace epchain {

struct CommandResult {
  // The first table is the primary output; the rest are written beside it
  // under "<stem>.<name>.<ext>".
  std::vector<std::pair<std::string, Table>> tables;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<std::string> warnings;
  bool checks_passed = true;
};

/// Built-in configuration of each command; user config is merged over it.
inline nlohmann::json default_config(const std::string& command) {
  using nlohmann::json;
  if (command == "fig2")
    return {{"chain", {{"n", 2}, {"g", 1.0}, {"J", 1.0}, {"eta", 0.2}}},
            {"g_range", {{"lo", 0.0}, {"hi", 2.0}, {"steps", 301}}},
            {"times", {{"lo", 0.0}, {"hi", 5.0}, {"steps", 501}}},
            {"traces", {0.79, 1.19, 1.59}},
            {"trace_times", {{"lo", 0.0}, {"hi", 20.0}, {"steps", 401}}},
            {"partitions", {"1|2"}}};
  if (command == "fig3")
    return {{"chain", {{"n", 2}, {"g", 1.0}, {"J", 1.0}, {"eta", 0.0}}},
            {"ns", {2, 3, 4, 5, 6}},
            {"phi_steps", 65},
            {"t", 3.5},
            {"ratio_ns", {3, 4, 5, 6}},
            {"ratio_times", {{"lo", 0.25}, {"hi", 5.0}, {"steps", 20}}},
            {"fit_ns", {{"lo", 2}, {"hi", 30}}},
            {"symmetry_tol", 1e-8}};
  if (command == "fig4")
    return {{"chain", {{"n", 3}, {"g", 1.0}, {"J", 1.0}, {"eta", 0.0}}},
            {"g1_range", {{"lo", 0.0}, {"hi", 2.0}, {"steps", 101}}},
            {"g2_range", {{"lo", 0.0}, {"hi", 2.0}, {"steps", 101}}},
            {"t", 5.0},
            {"linecut_steps", 101},
            {"trace_varphi", {0.0, M_PI / 8, M_PI / 4}},
            {"trace_times", {{"lo", 0.0}, {"hi", 5.0}, {"steps", 101}}},
            {"partitions", {"13|2", "12|3", "23|1"}},
            {"closed_form_tol", 1e-6}};
  if (command == "es-scan")
    return {{"chain", {{"n", 3}, {"g", 1.0}, {"J", 1.0}, {"eta", 0.0}}},
            {"sweep",
             {{{"name", "g1"}, {"lo", 0.0}, {"hi", 2.0}, {"steps", 21}},
              {{"name", "g2"}, {"lo", 0.0}, {"hi", 2.0}, {"steps", 21}}}},
            {"rank_tol", kDefaultRankTol}};
  if (command == "entangle")
    return {{"chain", {{"n", 2}, {"g", 1.0}, {"J", 1.0}, {"eta", 0.0}}},
            {"times", {{"lo", 0.0}, {"hi", 5.0}, {"steps", 51}}}};
  if (command == "spectrum")
    return {{"chain", {{"n", 2}, {"g", 1.0}, {"J", 1.0}, {"eta", 0.0}}},
            {"detect_eps", true},
            {"rank_tol", kDefaultRankTol}};
  return json::object();
}

namespace detail {

inline double setting(const SweepPlan& plan, const char* key) {
  return finite_number(plan.settings, key);
}

inline int int_setting(const SweepPlan& plan, const char* key, int min_value) {
  const auto& doc = plan.settings;
  if (!doc.contains(key) || !doc.at(key).is_number_integer())
    throw Error(ErrorCode::ConfigError, std::string("'") + key + "' must be an integer");
  const int v = doc.at(key).get<int>();
  if (v < min_value)
    throw Error(ErrorCode::ConfigError,
                std::string("'") + key + "' must be >= " + std::to_string(min_value));
  return v;
}

inline std::vector<int> int_list(const SweepPlan& plan, const char* key, int min_value) {
  const auto& doc = plan.settings;
  if (!doc.contains(key) || !doc.at(key).is_array())
    throw Error(ErrorCode::ConfigError, std::string("'") + key + "' must be an array of integers");
  std::vector<int> out;
  for (const auto& x : doc.at(key)) {
    if (!x.is_number_integer() || x.get<int>() < min_value)
      throw Error(ErrorCode::ConfigError, std::string("'") + key + "' entries must be integers >= " +
                                              std::to_string(min_value));
    out.push_back(x.get<int>());
  }
  return out;
}

inline double scalar_param(const ParamValue& p, const char* name) {
  if (const double* v = std::get_if<double>(&p)) return *v;
  throw Error(ErrorCode::ConfigError, std::string("'") + name + "' must be a scalar here");
}

inline bool flag_setting(const SweepPlan& plan, const char* key) {
  const auto& doc = plan.settings;
  if (!doc.contains(key)) return false;
  if (!doc.at(key).is_boolean()) throw Error(ErrorCode::ConfigError, std::string("'") + key + "' must be a boolean");
  return doc.at(key).get<bool>();
}

/// "1|rest" selects the first mode against the others for any N.
inline Bipartition resolve_partition(const std::string& text, int n) {
  if (text == "1|rest") return Bipartition::one_vs_rest(n);
  return Bipartition::parse(text, n);
}

inline std::vector<std::string> axis_columns(const SweepPlan& plan) {
  std::vector<std::string> cols;
  for (const auto& a : plan.axes) cols.push_back(a.name);
  return cols;
}

inline void append_cells(std::vector<Cell>& row, const std::vector<double>& values) {
  for (double v : values) row.emplace_back(v);
}

inline void append_spectrum(std::vector<Cell>& row, const std::vector<cplx>& ev, std::size_t width) {
  for (std::size_t k = 0; k < width; ++k) {
    if (k < ev.size()) {
      row.emplace_back(ev[k].real());
      row.emplace_back(ev[k].imag());
    } else {
      row.emplace_back(std::monostate{});
      row.emplace_back(std::monostate{});
    }
  }
}

inline void add_spectrum_columns(std::vector<std::string>& cols, std::size_t width) {
  for (std::size_t k = 1; k <= width; ++k) {
    cols.push_back("re_" + std::to_string(k));
    cols.push_back("im_" + std::to_string(k));
  }
}

inline int max_modes(const SweepPlan& plan) {
  int n = plan.chain.n;
  for (const auto& a : plan.axes)
    if (a.name == "N") n = static_cast<int>(std::max(a.range.lo, a.range.hi));
  return n;
}

inline std::string describe_clusters(const std::vector<EpCluster>& clusters) {
  std::string out;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    if (i) out += ';';
    out += format_blocks(clusters[i].jordan_blocks);
  }
  return out;
}

inline Table transitions_table(const std::string& axis, const std::vector<double>& points,
                               double lo, double hi, const std::function<Region(double)>& region_at) {
  Table t{{axis, "left_region", "right_region"}, {}};
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double left = 0.5 * ((i ? points[i - 1] : lo) + points[i]);
    const double right = 0.5 * (points[i] + (i + 1 < points.size() ? points[i + 1] : hi));
    t.add_row({points[i], std::string(to_string(region_at(left))),
               std::string(to_string(region_at(right)))});
  }
  return t;
}

}  // namespace detail

/// Eigenvalues, region and EP content at every grid cell; with a single
/// continuous axis also the located spectral transitions.
inline CommandResult cmd_spectrum(const SweepPlan& plan) {
  for (const auto& a : plan.axes)
    if (a.name == "t") throw Error(ErrorCode::ConfigError, "spectrum does not take a 't' axis");
  const bool detect = detail::flag_setting(plan, "detect_eps");
  const double rank_tol = detail::setting(plan, "rank_tol");
  const auto width = static_cast<std::size_t>(2 * detail::max_modes(plan));

  std::vector<std::string> cols = detail::axis_columns(plan);
  for (const char* c : {"region", "boundary", "ep_count", "max_ep_order", "ep_blocks"}) cols.push_back(c);
  detail::add_spectrum_columns(cols, width);

  const std::size_t cells = plan.cell_count();
  std::vector<std::vector<Cell>> rows(cells);
  std::vector<int> ambiguous(cells, 0);
  parallel_for(cells, plan.threads, [&](std::size_t idx) {
    const auto values = plan.cell(idx);
    const BdgMatrix m = build_bdg_matrix(build_chain_spec(chain_at(plan, values)));
    const SpectrumReport report = analyze_spectrum(m, plan.tol);
    std::vector<Cell> row;
    detail::append_cells(row, values);
    row.emplace_back(std::string(to_string(report.region)));
    row.emplace_back(static_cast<long long>(report.boundary));
    if (detect) {
      try {
        const auto clusters = detect_eps(m, kDefaultClusterTol, rank_tol);
        row.emplace_back(static_cast<long long>(clusters.size()));
        row.emplace_back(static_cast<long long>(max_ep_order(clusters)));
        row.emplace_back(detail::describe_clusters(clusters));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::RankAmbiguity) throw;
        ambiguous[idx] = 1;
        row.emplace_back(std::monostate{});
        row.emplace_back(std::monostate{});
        row.emplace_back(std::string("rank-ambiguous"));
      }
    } else {
      for (int k = 0; k < 3; ++k) row.emplace_back(std::monostate{});
    }
    detail::append_spectrum(row, report.eigenvalues, width);
    rows[idx] = std::move(row);
  });

  CommandResult out;
  Table main{cols, {}};
  for (auto& r : rows) main.add_row(std::move(r));
  out.tables.emplace_back("", std::move(main));
  const auto n_ambiguous = std::count(ambiguous.begin(), ambiguous.end(), 1);
  if (n_ambiguous)
    out.warnings.push_back(std::to_string(n_ambiguous) + " cell(s) had an ambiguous numerical rank");
  out.summary["cells"] = cells;

  if (plan.axes.size() == 1 && plan.axes[0].name != "N" && plan.axes[0].range.steps > 1) {
    const Axis& axis = plan.axes[0];
    const double lo = std::min(axis.range.lo, axis.range.hi), hi = std::max(axis.range.lo, axis.range.hi);
    auto family = [&](double v) { return build_chain_spec(chain_at(plan, {v})); };
    auto region_at = [&](double v) {
      return classify_region(eigenspectrum(build_bdg_matrix(family(v))), plan.tol);
    };
    LocateOptions opts;
    opts.region_tol = plan.tol;
    opts.grid_steps = std::max(200, axis.range.steps);
    std::vector<double> points;
    try {
      points = locate_ep_1d(family, lo, hi, opts);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoTransition) throw;
    }
    out.summary["transitions"] = points;
    out.tables.emplace_back("transitions", detail::transitions_table(axis.name, points, lo, hi, region_at));
  }
  return out;
}

/// nu_- and log-negativity trajectories for every grid cell and partition.
inline CommandResult cmd_entanglement(const SweepPlan& plan_in) {
  SweepPlan plan = plan_in;
  std::vector<double> times = plan.times;
  for (auto it = plan.axes.begin(); it != plan.axes.end(); ++it) {
    if (it->name == "t") {
      times = it->range.values();
      plan.axes.erase(it);
      break;
    }
  }
  if (times.empty()) throw Error(ErrorCode::ConfigError, "entangle needs 'times' or a 't' axis");
  if (!std::is_sorted(times.begin(), times.end()))
    throw Error(ErrorCode::UnsortedTimes, "times must be ascending");

  const bool n_swept = std::any_of(plan.axes.begin(), plan.axes.end(), [](const Axis& a) { return a.name == "N"; });
  std::vector<std::string> partitions = plan.partitions;
  if (partitions.empty())
    partitions.push_back(n_swept ? "1|rest" : Bipartition::one_vs_rest(plan.chain.n).label());
  const bool export_cm = detail::flag_setting(plan, "export_covariance");
  if (export_cm && n_swept)
    throw Error(ErrorCode::ConfigError, "export_covariance cannot be combined with an 'N' axis");

  std::vector<double> occupancies;
  if (plan.settings.contains("occupancies")) {
    const auto& occ = plan.settings.at("occupancies");
    if (occ.is_number()) occupancies.assign(1, occ.get<double>());
    else occupancies = grid_from_json(occ, "occupancies");
  }

  // Partition labels are checked against the template before any work.
  for (std::size_t idx = 0; idx < plan.cell_count(); idx += std::max<std::size_t>(1, plan.cell_count() - 1))
    for (const auto& p : partitions) detail::resolve_partition(p, chain_at(plan, plan.cell(idx)).n);

  std::vector<std::string> cols = detail::axis_columns(plan);
  for (const char* c : {"t", "region", "status"}) cols.push_back(c);
  for (const auto& p : partitions) {
    cols.push_back("nu_minus[" + p + "]");
    cols.push_back("log_neg[" + p + "]");
  }
  const int n_fixed = plan.chain.n;
  if (export_cm)
    for (int i = 0; i < 2 * n_fixed; ++i)
      for (int j = i; j < 2 * n_fixed; ++j) cols.push_back("s_" + std::to_string(i) + "_" + std::to_string(j));

  const std::size_t cells = plan.cell_count();
  std::vector<std::vector<std::vector<Cell>>> blocks(cells);
  std::vector<std::string> cell_warnings(cells);
  parallel_for(cells, plan.threads, [&](std::size_t idx) {
    const auto values = plan.cell(idx);
    const ChainSpec spec = build_chain_spec(chain_at(plan, values));
    const int n = spec.n_modes();
    const BdgMatrix m = build_bdg_matrix(spec);
    const std::string region(to_string(classify_region(eigenspectrum(m), plan.tol)));
    const RealGenerator k = quadrature_generator(m);
    std::vector<Bipartition> parts;
    for (const auto& p : partitions) parts.push_back(detail::resolve_partition(p, n));
    const GaussianState initial =
        occupancies.empty() ? vacuum_state(n)
                            : initial_state(n, occupancies.size() == 1
                                                   ? std::vector<double>(n, occupancies[0])
                                                   : occupancies);
    for (double t : times) {
      std::vector<Cell> row;
      detail::append_cells(row, values);
      row.emplace_back(t);
      row.emplace_back(region);
      if (growth_exponent(k, t) > kMaxGrowthExponent) {
        row.emplace_back(std::string("overflow"));
        while (row.size() < cols.size()) row.emplace_back(std::monostate{});
        blocks[idx].push_back(std::move(row));
        cell_warnings[idx] = "trajectory truncated at t=" + format_double(t) + " (||K t||_1 above " +
                             format_double(kMaxGrowthExponent) + ")";
        break;
      }
      const GaussianState state = evolve(initial, k, t);
      row.emplace_back(std::string("ok"));
      for (const auto& part : parts) {
        const auto r = entanglement(state, part);
        row.emplace_back(r.nu_minus);
        row.emplace_back(r.log_negativity);
      }
      if (export_cm)
        for (int i = 0; i < 2 * n; ++i)
          for (int j = i; j < 2 * n; ++j) row.emplace_back(state.cm()(i, j));
      blocks[idx].push_back(std::move(row));
    }
  });

  CommandResult out;
  Table main{cols, {}};
  for (auto& b : blocks)
    for (auto& r : b) main.add_row(std::move(r));
  out.tables.emplace_back("", std::move(main));
  for (std::size_t idx = 0; idx < cells; ++idx)
    if (!cell_warnings[idx].empty()) out.warnings.push_back("cell " + std::to_string(idx) + ": " + cell_warnings[idx]);
  out.summary["cells"] = cells;
  out.summary["times"] = times.size();
  out.summary["truncated_cells"] = out.warnings.size();
  return out;
}

/// Two-mode chain with single-mode squeezing: spectrum versus g, the nu_- map
/// over (g, t), three representative trajectories and the located EPs.
inline CommandResult cmd_fig2(const SweepPlan& plan) {
  const Range g_range = range_from_json(plan.settings.at("g_range"));
  const auto g_values = g_range.values();
  const auto traces = grid_from_json(plan.settings.at("traces"), "traces");
  const auto trace_times = grid_from_json(plan.settings.at("trace_times"), "trace_times");
  const auto& times = plan.times;
  if (times.empty()) throw Error(ErrorCode::ConfigError, "fig2 needs 'times'");
  if (plan.partitions.size() != 1) throw Error(ErrorCode::ConfigError, "fig2 takes exactly one partition");
  const Bipartition part = detail::resolve_partition(plan.partitions[0], plan.chain.n);

  auto chain_with_g = [&](double g) {
    ChainConfig c = plan.chain;
    c.g = g;
    return build_chain_spec(c);
  };
  const auto width = static_cast<std::size_t>(2 * plan.chain.n);

  // Per g: spectrum row and one nu_- row per time.
  std::vector<std::vector<Cell>> spectrum_rows(g_values.size());
  std::vector<std::vector<std::vector<Cell>>> grid_rows(g_values.size());
  std::vector<int> overflow(g_values.size(), 0);
  parallel_for(g_values.size(), plan.threads, [&](std::size_t i) {
    const double g = g_values[i];
    const BdgMatrix m = build_bdg_matrix(chain_with_g(g));
    const SpectrumReport report = analyze_spectrum(m, plan.tol);
    const std::string region(to_string(report.region));
    std::vector<Cell> srow{g, region};
    detail::append_spectrum(srow, report.eigenvalues, width);
    spectrum_rows[i] = std::move(srow);

    const RealGenerator k = quadrature_generator(m);
    const GaussianState vac = vacuum_state(plan.chain.n);
    for (double t : times) {
      std::vector<Cell> row{g, t, region};
      if (growth_exponent(k, t) > kMaxGrowthExponent) {
        row.emplace_back(std::monostate{});
        ++overflow[i];
      } else {
        row.emplace_back(nu_minus(evolve(vac, k, t), part));
      }
      grid_rows[i].push_back(std::move(row));
    }
  });

  CommandResult out;
  Table grid{{"g", "t", "region", "nu_minus"}, {}};
  for (auto& block : grid_rows)
    for (auto& r : block) grid.add_row(std::move(r));
  out.tables.emplace_back("", std::move(grid));

  std::vector<std::string> scols{"g", "region"};
  detail::add_spectrum_columns(scols, width);
  Table spectrum{scols, {}};
  for (auto& r : spectrum_rows) spectrum.add_row(std::move(r));
  out.tables.emplace_back("spectrum", std::move(spectrum));

  Table trace_table{{"g", "t", "region", "nu_minus"}, {}};
  for (double g : traces) {
    const BdgMatrix m = build_bdg_matrix(chain_with_g(g));
    const std::string region(to_string(classify_region(eigenspectrum(m), plan.tol)));
    const RealGenerator k = quadrature_generator(m);
    std::vector<double> nus(trace_times.size(), std::nan(""));
    parallel_for(trace_times.size(), plan.threads, [&](std::size_t i) {
      if (growth_exponent(k, trace_times[i]) <= kMaxGrowthExponent)
        nus[i] = nu_minus(evolve(vacuum_state(plan.chain.n), k, trace_times[i]), part);
    });
    for (std::size_t i = 0; i < trace_times.size(); ++i) {
      if (std::isnan(nus[i])) {
        out.warnings.push_back("trace g=" + format_double(g) + " truncated at t=" + format_double(trace_times[i]));
        break;
      }
      trace_table.add_row({g, trace_times[i], region, nus[i]});
    }
  }
  out.tables.emplace_back("traces", std::move(trace_table));

  std::vector<double> points;
  const double lo = std::min(g_range.lo, g_range.hi), hi = std::max(g_range.lo, g_range.hi);
  if (hi > lo) {
    try {
      points = locate_ep_1d(chain_with_g, lo, hi, LocateOptions{1e-9, 200, plan.tol});
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoTransition) throw;
    }
  }
  out.tables.emplace_back("transitions",
                          detail::transitions_table("g", points, lo, hi, [&](double g) {
                            return classify_region(eigenspectrum(build_bdg_matrix(chain_with_g(g))), plan.tol);
                          }));
  const auto n_overflow = std::accumulate(overflow.begin(), overflow.end(), 0);
  if (n_overflow) out.warnings.push_back(std::to_string(n_overflow) + " grid cell(s) skipped by the overflow guard");
  out.summary["transitions"] = points;
  out.summary["grid"] = {{"g", g_values.size()}, {"t", times.size()}};
  return out;
}

/// Uniform chain at g = J: -ln nu_- versus phi for several N, the ratio R(N, t)
/// and an a e^{bN} + c fit of R(N) at fixed t.
inline CommandResult cmd_fig3(const SweepPlan& plan) {
  const double g = detail::scalar_param(plan.chain.g, "g");
  const double J = detail::scalar_param(plan.chain.J, "J");
  const double eta = detail::scalar_param(plan.chain.eta, "eta");
  if (g != J || eta != 0.0) throw Error(ErrorCode::ConfigError, "fig3 requires g = J and eta = 0");
  if (!(J > 0.0)) throw Error(ErrorCode::ConfigError, "fig3 requires J > 0");
  const auto ns = detail::int_list(plan, "ns", 2);
  const int phi_steps = detail::int_setting(plan, "phi_steps", 2);
  const double t = detail::setting(plan, "t");
  const auto ratio_ns = detail::int_list(plan, "ratio_ns", 2);
  const auto ratio_times = grid_from_json(plan.settings.at("ratio_times"), "ratio_times");
  const Range fit_range = range_from_json(plan.settings.at("fit_ns"));
  const double symmetry_tol = detail::setting(plan, "symmetry_tol");
  const auto pipeline = numeric_ep_pipeline(J);
  const Range phis{0.0, M_PI, phi_steps};

  CommandResult out;
  const std::size_t np = static_cast<std::size_t>(phi_steps);
  std::vector<double> nu(ns.size() * np);
  parallel_for(nu.size(), plan.threads, [&](std::size_t idx) {
    nu[idx] = pipeline(ns[idx / np], phis.at(idx % np), t);
  });
  Table main{{"N", "phi", "t", "nu_minus", "neg_log_nu"}, {}};
  double asymmetry = 0.0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    for (std::size_t j = 0; j < np; ++j) {
      const double v = nu[i * np + j];
      main.add_row({static_cast<long long>(ns[i]), phis.at(j), t, v, -std::log(v)});
      const double mirror = -std::log(nu[i * np + (np - 1 - j)]);
      asymmetry = std::max(asymmetry, std::abs(-std::log(v) - mirror) / std::max(1.0, std::abs(mirror)));
    }
  }
  out.tables.emplace_back("", std::move(main));
  out.summary["phi_symmetry_defect"] = asymmetry;
  if (asymmetry > symmetry_tol) {
    out.checks_passed = false;
    out.warnings.push_back("-ln nu_- is not symmetric about phi = pi/2 (defect " + format_double(asymmetry) + ")");
  }

  std::vector<double> ratio(ratio_ns.size() * ratio_times.size());
  parallel_for(ratio.size(), plan.threads, [&](std::size_t idx) {
    ratio[idx] = enhancement_ratio(ratio_ns[idx / ratio_times.size()], ratio_times[idx % ratio_times.size()], pipeline);
  });
  Table ratio_table{{"N", "t", "R"}, {}};
  for (std::size_t idx = 0; idx < ratio.size(); ++idx)
    ratio_table.add_row({static_cast<long long>(ratio_ns[idx / ratio_times.size()]),
                         ratio_times[idx % ratio_times.size()], ratio[idx]});
  out.tables.emplace_back("ratio", std::move(ratio_table));

  const int n_lo = static_cast<int>(fit_range.lo), n_hi = static_cast<int>(fit_range.hi);
  if (n_lo != fit_range.lo || n_hi != fit_range.hi || n_lo < 2 || n_hi - n_lo < 2)
    throw Error(ErrorCode::ConfigError, "'fit_ns' needs integer lo >= 2 and at least three sizes");
  std::vector<double> fit_x, fit_y(static_cast<std::size_t>(n_hi - n_lo + 1));
  for (int n = n_lo; n <= n_hi; ++n) fit_x.push_back(n);
  parallel_for(fit_y.size(), plan.threads,
               [&](std::size_t i) { fit_y[i] = enhancement_ratio(n_lo + static_cast<int>(i), t, pipeline); });
  const ExpFit fit = fit_exponential(fit_x, fit_y);
  Table fit_table{{"N", "t", "R", "R_fit"}, {}};
  for (std::size_t i = 0; i < fit_x.size(); ++i)
    fit_table.add_row({static_cast<long long>(fit_x[i]), t, fit_y[i], fit.a * std::exp(fit.b * fit_x[i]) + fit.c});
  out.tables.emplace_back("fit", std::move(fit_table));
  out.summary["fit"] = {{"a", fit.a}, {"b", fit.b}, {"c", fit.c}, {"rms", fit.rms}, {"t", t}};
  return out;
}

/// Three-mode chain with J1 = J2 = J: region and nu_- over (g1, g2), the
/// line cut along g1^2 + g2^2 = 2 J^2 and time traces at fixed varphi.
inline CommandResult cmd_fig4(const SweepPlan& plan) {
  if (plan.chain.n != 3) throw Error(ErrorCode::ConfigError, "fig4 requires n = 3");
  const double J = detail::scalar_param(plan.chain.J, "J");
  if (detail::scalar_param(plan.chain.eta, "eta") != 0.0) throw Error(ErrorCode::ConfigError, "fig4 requires eta = 0");
  if (!(J > 0.0)) throw Error(ErrorCode::ConfigError, "fig4 requires J > 0");
  const auto g1s = range_from_json(plan.settings.at("g1_range")).values();
  const auto g2s = range_from_json(plan.settings.at("g2_range")).values();
  const double t = detail::setting(plan, "t");
  const int cut_steps = detail::int_setting(plan, "linecut_steps", 1);
  const auto trace_varphi = grid_from_json(plan.settings.at("trace_varphi"), "trace_varphi");
  const auto trace_times = grid_from_json(plan.settings.at("trace_times"), "trace_times");
  const double cf_tol = detail::setting(plan, "closed_form_tol");
  std::vector<Bipartition> parts;
  for (const auto& p : plan.partitions) parts.push_back(detail::resolve_partition(p, 3));
  const Bipartition cut = Bipartition::parse("13|2", 3);

  CommandResult out;
  std::vector<std::string> cols{"g1", "g2", "region", "surface_residual"};
  for (const auto& p : parts) cols.push_back("nu_minus[" + p.label() + "]");
  std::vector<std::vector<Cell>> rows(g1s.size() * g2s.size());
  std::vector<int> overflow(rows.size(), 0);
  parallel_for(rows.size(), plan.threads, [&](std::size_t idx) {
    const double g1 = g1s[idx / g2s.size()], g2 = g2s[idx % g2s.size()];
    const ChainSpec spec = ChainSpec::three_mode(g1, g2, J, J);
    const BdgMatrix m = build_bdg_matrix(spec);
    std::vector<Cell> row{g1, g2, std::string(to_string(classify_region(eigenspectrum(m), plan.tol))),
                          g1 * g1 + g2 * g2 - 2 * J * J};
    const RealGenerator k = quadrature_generator(m);
    if (growth_exponent(k, t) > kMaxGrowthExponent) {
      overflow[idx] = 1;
      for (std::size_t p = 0; p < parts.size(); ++p) row.emplace_back(std::monostate{});
    } else {
      const GaussianState state = evolve(vacuum_state(3), k, t);
      for (const auto& p : parts) row.emplace_back(nu_minus(state, p));
    }
    rows[idx] = std::move(row);
  });
  Table grid{cols, {}};
  for (auto& r : rows) grid.add_row(std::move(r));
  out.tables.emplace_back("", std::move(grid));

  double worst = 0.0;
  const Range cut_range{-M_PI / 4, M_PI / 4, cut_steps};
  Table linecut{{"varphi", "g1", "g2", "t", "nu_minus", "nu_minus_closed_form", "neg_log_nu"}, {}};
  std::vector<double> cut_nu(static_cast<std::size_t>(cut_steps));
  parallel_for(cut_nu.size(), plan.threads, [&](std::size_t i) {
    const auto [g1, g2] = surface_point(cut_range.at(i), J);
    cut_nu[i] = pipeline_nu_minus(ChainSpec::three_mode(g1, g2, J, J), t, cut);
  });
  for (std::size_t i = 0; i < cut_nu.size(); ++i) {
    const double vp = cut_range.at(i);
    const auto [g1, g2] = surface_point(vp, J);
    const double cf = nu_closed_form_three_mode_nonuniform(vp, J, t);
    worst = std::max(worst, std::abs(cut_nu[i] - cf));
    linecut.add_row({vp, g1, g2, t, cut_nu[i], cf, -std::log(cut_nu[i])});
  }
  out.tables.emplace_back("linecut", std::move(linecut));

  Table traces{{"varphi", "t", "nu_minus", "nu_minus_closed_form", "neg_log_nu"}, {}};
  std::vector<double> trace_nu(trace_varphi.size() * trace_times.size());
  parallel_for(trace_nu.size(), plan.threads, [&](std::size_t idx) {
    const auto [g1, g2] = surface_point(trace_varphi[idx / trace_times.size()], J);
    trace_nu[idx] = pipeline_nu_minus(ChainSpec::three_mode(g1, g2, J, J), trace_times[idx % trace_times.size()], cut);
  });
  for (std::size_t idx = 0; idx < trace_nu.size(); ++idx) {
    const double vp = trace_varphi[idx / trace_times.size()], tt = trace_times[idx % trace_times.size()];
    const double cf = nu_closed_form_three_mode_nonuniform(vp, J, tt);
    worst = std::max(worst, std::abs(trace_nu[idx] - cf));
    traces.add_row({vp, tt, trace_nu[idx], cf, -std::log(trace_nu[idx])});
  }
  out.tables.emplace_back("traces", std::move(traces));

  out.summary["closed_form_max_deviation"] = worst;
  if (worst > cf_tol) {
    out.checks_passed = false;
    out.warnings.push_back("closed form deviates from the pipeline by " + format_double(worst));
  }
  const auto n_overflow = std::accumulate(overflow.begin(), overflow.end(), 0);
  if (n_overflow) out.warnings.push_back(std::to_string(n_overflow) + " grid cell(s) skipped by the overflow guard");
  out.summary["grid"] = {{"g1", g1s.size()}, {"g2", g2s.size()}};
  return out;
}

/// Scan of the three-mode parameter space for the exceptional surface
/// g1^2 + g2^2 = J1^2 + J2^2. Axes not swept take the chain template values.
inline CommandResult cmd_es_scan(const SweepPlan& plan) {
  if (plan.chain.n != 3) throw Error(ErrorCode::ConfigError, "es-scan requires n = 3");
  SurfaceGrid grid;
  const auto bonds = [&](const ParamValue& p, const char* name) { return detail::expand(p, 2, name); };
  const auto g = bonds(plan.chain.g, "g"), J = bonds(plan.chain.J, "J");
  grid.g1 = {g[0]};
  grid.g2 = {g[1]};
  grid.J1 = {J[0]};
  grid.J2 = {J[1]};
  for (const auto& a : plan.axes) {
    if (a.name == "g1") grid.g1 = a.range.values();
    else if (a.name == "g2") grid.g2 = a.range.values();
    else if (a.name == "J1") grid.J1 = a.range.values();
    else if (a.name == "J2") grid.J2 = a.range.values();
    else throw Error(ErrorCode::ConfigError, "es-scan axes are g1, g2, J1, J2; got '" + a.name + "'");
  }
  const double rank_tol = detail::setting(plan, "rank_tol");
  std::vector<SurfacePoint> points(grid.g1.size() * grid.g2.size() * grid.J1.size() * grid.J2.size());
  std::vector<int> ambiguous(points.size(), 0);
  const std::size_t n2 = grid.g2.size(), n3 = grid.J1.size(), n4 = grid.J2.size();
  parallel_for(points.size(), plan.threads, [&](std::size_t idx) {
    const double g1 = grid.g1[idx / (n2 * n3 * n4)], g2 = grid.g2[idx / (n3 * n4) % n2],
                 J1 = grid.J1[idx / n4 % n3], J2 = grid.J2[idx % n4];
    try {
      points[idx] = classify_surface_point(g1, g2, J1, J2, plan.tol, rank_tol);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::RankAmbiguity) throw;
      points[idx] = SurfacePoint{g1, g2, J1, J2, std::abs(g1 * g1 + g2 * g2 - J1 * J1 - J2 * J2), true};
      ambiguous[idx] = 1;
    }
  });

  CommandResult out;
  Table t{{"g1", "g2", "J1", "J2", "residual", "on_surface", "ep_order", "block_sizes", "kind"}, {}};
  long long on_surface = 0, with_ep = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    on_surface += p.on_surface;
    with_ep += p.ep_order > 0;
    t.add_row({p.g1, p.g2, p.J1, p.J2, p.residual, static_cast<long long>(p.on_surface),
               static_cast<long long>(p.ep_order),
               ambiguous[i] ? Cell(std::string("rank-ambiguous")) : Cell(format_blocks(p.block_sizes)),
               std::string(to_string(p.kind))});
  }
  out.tables.emplace_back("", std::move(t));
  const auto n_ambiguous = std::count(ambiguous.begin(), ambiguous.end(), 1);
  if (n_ambiguous) out.warnings.push_back(std::to_string(n_ambiguous) + " point(s) had an ambiguous numerical rank");
  out.summary["points"] = points.size();
  out.summary["on_surface"] = on_surface;
  out.summary["with_ep"] = with_ep;
  return out;
}

}  // namespace epchain
