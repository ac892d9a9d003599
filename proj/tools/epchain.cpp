// epchain: spectra, EP detection and entanglement sweeps for bosonic chains.
//
// Exit codes: 0 success, 1 check failure, 2 config error, 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "epchain/experiments.hpp"
#include "epchain/selftest.hpp"

#ifndef EPCHAIN_VERSION
#define EPCHAIN_VERSION "unknown"
#endif

namespace {

enum Exit { kOk = 0, kCheckFailure = 1, kConfigError = 2, kNumericFailure = 3 };

struct Options {
  std::string config;
  std::string out;
  std::string format = "csv";
  std::optional<double> tol;
  unsigned threads = epchain::default_thread_count();
  std::vector<std::string> partitions;
  std::string fault;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output file ('-' for stdout)");
  cmd->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--tol", o.tol, "tolerance override");
  cmd->add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--partition", o.partitions, "bipartition such as 13|2 (repeatable)");
}

nlohmann::json read_config(const std::string& path) {
  if (path.empty()) return nullptr;
  std::ifstream in(path);
  if (!in) throw epchain::Error(epchain::ErrorCode::ConfigError, "cannot read '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw epchain::Error(epchain::ErrorCode::ConfigError, path + ": " + e.what());
  }
}

std::string sidecar_path(const std::string& out, const std::string& name, epchain::OutputFormat f) {
  std::string stem = out;
  const std::string ext = std::string(".") + epchain::extension(f);
  if (stem.size() > ext.size() && stem.compare(stem.size() - ext.size(), ext.size(), ext) == 0)
    stem.resize(stem.size() - ext.size());
  return stem + "." + name + ext;
}

int run_selftest(const Options& o) {
  epchain::SelftestOptions so;
  if (o.tol) {
    if (!(*o.tol > 0)) throw epchain::Error(epchain::ErrorCode::ConfigError, "--tol must be positive");
    so.tol_scale = *o.tol;
  }
  if (o.fault == "omega") so.perturb_omega = true;
  const auto checks = epchain::run_selftest(so);
  bool ok = true;
  epchain::Table t{{"check", "worst", "threshold", "passed"}, {}};
  for (const auto& c : checks) {
    ok = ok && c.passed;
    std::printf("%s %-26s worst=%.3e threshold=%.3e\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.worst,
                c.threshold);
    t.add_row({c.name, c.worst, c.threshold, static_cast<long long>(c.passed)});
  }
  if (!o.out.empty() && o.out != "-") epchain::write_table(o.out, t, epchain::parse_format(o.format));
  if (!ok) {
    std::fprintf(stderr, "selftest failed:");
    for (const auto& c : checks)
      if (!c.passed) std::fprintf(stderr, " %s", c.name.c_str());
    std::fprintf(stderr, "\n");
  }
  return ok ? kOk : kCheckFailure;
}

int run_command(const std::string& command, const Options& o) {
  using namespace epchain;
  const nlohmann::json user = read_config(o.config);
  SweepPlan plan;
  try {
    plan = sweep_plan_from_json(default_config(command), user);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  plan.format = parse_format(o.format);
  plan.threads = o.threads;
  if (o.tol) {
    if (!(*o.tol > 0)) throw Error(ErrorCode::ConfigError, "--tol must be positive");
    plan.tol = *o.tol;
    plan.settings["tol"] = *o.tol;
  }
  if (!o.partitions.empty()) plan.partitions = o.partitions;

  const bool figure = command == "fig2" || command == "fig3" || command == "fig4";
  plan.output = o.out.empty() ? (figure ? command + "." + extension(plan.format) : "-") : o.out;

  CommandResult result;
  if (command == "spectrum") result = cmd_spectrum(plan);
  else if (command == "entangle") result = cmd_entanglement(plan);
  else if (command == "fig2") result = cmd_fig2(plan);
  else if (command == "fig3") result = cmd_fig3(plan);
  else if (command == "fig4") result = cmd_fig4(plan);
  else if (command == "es-scan") result = cmd_es_scan(plan);

  for (const auto& w : result.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());

  if (plan.output == "-") {
    write_table(std::cout, result.tables.front().second, plan.format);
    for (std::size_t i = 1; i < result.tables.size(); ++i) {
      std::ostringstream os;
      write_table(os, result.tables[i].second, plan.format);
      std::fprintf(stderr, "# %s\n%s", result.tables[i].first.c_str(), os.str().c_str());
    }
  } else {
    std::vector<std::string> outputs{plan.output};
    write_table(plan.output, result.tables.front().second, plan.format);
    for (std::size_t i = 1; i < result.tables.size(); ++i) {
      outputs.push_back(sidecar_path(plan.output, result.tables[i].first, plan.format));
      write_table(outputs.back(), result.tables[i].second, plan.format);
    }
    nlohmann::json manifest{{"tool", "epchain"},
                            {"version", EPCHAIN_VERSION},
                            {"command", command},
                            {"config_file", o.config},
                            {"config", user},
                            {"effective_config", to_json(plan)},
                            {"outputs", outputs},
                            {"summary", result.summary},
                            {"warnings", result.warnings},
                            {"checks_passed", result.checks_passed}};
    std::ofstream m(plan.output + ".manifest.json", std::ios::binary);
    if (!m) throw Error(ErrorCode::ConfigError, "cannot write manifest next to '" + plan.output + "'");
    m << manifest.dump(2) << '\n';
  }
  return result.checks_passed ? kOk : kCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exceptional points and entanglement in bosonic Kitaev chains"};
  app.set_version_flag("--version", std::string(EPCHAIN_VERSION));
  app.require_subcommand(1);
  Options o;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"spectrum", "eigenvalues, region labels and EPs over a parameter grid"},
      {"entangle", "nu_- and log-negativity trajectories"},
      {"fig2", "two-mode chain with single-mode squeezing: spectrum and nu_- map"},
      {"fig3", "phase dependence at the highest-order EPs and enhancement ratio"},
      {"fig4", "three-mode nonuniform chain: nu_- map and exceptional-surface line cut"},
      {"es-scan", "scan of the three-mode exceptional surface"},
      {"selftest", "run the invariant suite"}};
  for (const auto& [name, help] : commands) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, o);
#ifdef EPCHAIN_ENABLE_FAULT_INJECTION
    if (name == "selftest")
      cmd->add_option("--inject-fault", o.fault, "deliberately break a check")->check(CLI::IsMember({"omega"}));
#endif
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "selftest") return run_selftest(o);
    return run_command(command, o);
  } catch (const epchain::Error& e) {
    std::fprintf(stderr, "epchain %s: %s\n", command.c_str(), e.what());
    return e.is_config_error() ? kConfigError : kNumericFailure;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "epchain %s: ConfigError: %s\n", command.c_str(), e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "epchain %s: %s\n", command.c_str(), e.what());
    return kNumericFailure;
  }
}
