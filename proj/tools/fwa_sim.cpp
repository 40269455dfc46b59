// fwa-sim: scenario driver.
//
//   fwa-sim validate --config s.yaml [--normalized]
//   fwa-sim run      --config s.yaml [--trace t.jsonl] [--metrics m.csv] [--seed N] [--duration-ms N]
//   fwa-sim plan     --config s.yaml
//   fwa-sim bf       --config s.yaml
//
// Exit codes: 0 ok, 2 config error, 3 infeasible schedule, 4 runtime failure.

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fwa/errors.hpp"
#include "fwa/scenario.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::string> trace;
  std::optional<std::string> metrics;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration_ms;
  bool validate_only = false;
  bool normalized = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "Scenario YAML file")->required();
  cmd->add_option("--trace", o.trace, "JSON-lines trace output");
  cmd->add_option("--metrics", o.metrics, "CSV metrics output");
  cmd->add_option("--seed", o.seed, "Override the scenario seed");
  cmd->add_option("--duration-ms", o.duration_ms, "Override the data phase duration");
  cmd->add_flag("--validate-only", o.validate_only, "Check the config and stop");
}

void report(const nlohmann::ordered_json& j) { std::cerr << j.dump() << '\n'; }

int load(const Options& o, fwa::ScenarioConfig& cfg) {
  try {
    cfg = fwa::load_config(o.config);
  } catch (const fwa::ConfigError& e) {
    report({{"error", "config"}, {"file", o.config}, {"problems", e.problems()}});
    return fwa::kExitConfigError;
  }
  if (o.seed) cfg.world.seed = *o.seed;
  if (o.trace) cfg.trace_path = *o.trace;
  if (o.metrics) cfg.metrics_path = *o.metrics;
  if (o.duration_ms) {
    if (!(*o.duration_ms > 0.0)) {
      report({{"error", "config"}, {"problems", {"--duration-ms: must be positive"}}});
      return fwa::kExitConfigError;
    }
    cfg.duration_us = std::llround(*o.duration_ms * 1000.0);
  }
  return fwa::kExitOk;
}

nlohmann::ordered_json summary(const fwa::Metrics& m) {
  const double seconds = static_cast<double>(m.end_us - m.data_start_us) / 1e6;
  auto links = nlohmann::ordered_json::array();
  for (const auto& l : m.links) {
    links.push_back({{"link", l.link.str()},
                     {"direction", fwa::to_string(l.direction)},
                     {"granted_bps", l.granted_rate_bps},
                     {"goodput_bps", seconds > 0 ? static_cast<double>(l.goodput_bits) / seconds : 0.0},
                     {"mpdus_delivered", l.mpdus_delivered}});
  }
  return {{"data_start_us", m.data_start_us},
          {"end_us", m.end_us},
          {"data_utilization", m.data_utilization},
          {"trained_links", m.trained_links},
          {"reports", m.reports.size()},
          {"tpc_updates", m.tpc_updates.size()},
          {"replans", m.replans},
          {"trace_records", m.trace_records},
          {"links", std::move(links)}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TDD mmWave distribution network simulator"};
  app.require_subcommand(1);
  Options opts;

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  add_common(validate, opts);
  validate->add_flag("--normalized", opts.normalized, "Print the normalized config");
  auto* run = app.add_subcommand("run", "Beamforming, planning and the timed run");
  add_common(run, opts);
  auto* plan = app.add_subcommand("plan", "Controller only; prints the global schedule");
  add_common(plan, opts);
  auto* bf = app.add_subcommand("bf", "Beamforming only; prints trained links");
  add_common(bf, opts);

  CLI11_PARSE(app, argc, argv);

  fwa::ScenarioConfig cfg;
  if (int rc = load(opts, cfg); rc != fwa::kExitOk) return rc;
  if (validate->parsed() || opts.validate_only) {
    if (opts.normalized) {
      std::cout << fwa::serialize_config(cfg);
    } else {
      std::cout << "ok\n";
    }
    return fwa::kExitOk;
  }

  if (bf->parsed()) {
    fwa::ScenarioConfig quiet = cfg;
    quiet.metrics_path.clear();
    try {
      fwa::World world(quiet.world);
      world.prepare();
      auto out = nlohmann::ordered_json::array();
      for (const auto& r : world.training()) out.push_back(fwa::to_json(r));
      std::cout << out.dump(2) << '\n';
    } catch (const std::exception& e) {
      report({{"error", "runtime"}, {"message", e.what()}});
      return fwa::kExitRuntimeError;
    }
    return fwa::kExitOk;
  }

  if (plan->parsed()) {
    fwa::ScenarioConfig quiet = cfg;
    quiet.trace_path.clear();
    quiet.metrics_path.clear();
    const auto outcome = fwa::plan_scenario(quiet);
    if (outcome.exit_code == fwa::kExitOk || outcome.exit_code == fwa::kExitInfeasible) {
      std::cout << fwa::to_json(outcome.plan).dump(2) << '\n';
    }
    if (outcome.exit_code != fwa::kExitOk) report(outcome.report);
    return outcome.exit_code;
  }

  const auto outcome = fwa::run_scenario(cfg);
  if (outcome.exit_code != fwa::kExitOk) {
    report(outcome.report);
    return outcome.exit_code;
  }
  std::cout << summary(outcome.metrics).dump(2) << '\n';
  return fwa::kExitOk;
}
