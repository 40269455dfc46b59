#pragma once

// Scenario files: YAML load/validate/serialize, and the orchestration behind
// the fwa-sim subcommands.

#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "fwa/sim_engine.hpp"

namespace fwa {

struct ScenarioConfig {
  WorldConfig world;
  TimeUs duration_us = 0;
  std::string trace_path;
  std::string metrics_path;

  bool operator==(const ScenarioConfig&) const = default;
};

/// Parses and fully validates a scenario. Throws ConfigError listing every
/// problem found, each prefixed with its field path (or line/column for
/// syntax errors).
ScenarioConfig parse_config(const std::string& yaml_text);
ScenarioConfig load_config(const std::string& path);

/// Explicit, normalized YAML: codebooks expanded per node, every default
/// written out. Parsing the output yields an equal config.
std::string serialize_config(const ScenarioConfig& cfg);

enum ExitCode : int {
  kExitOk = 0,
  kExitConfigError = 2,
  kExitInfeasible = 3,
  kExitRuntimeError = 4,
};

struct RunOutcome {
  int exit_code = kExitOk;
  Metrics metrics;
  GlobalSchedule plan;
  /// Machine-readable report for non-zero exits.
  nlohmann::ordered_json report;
};

/// Beamforming, planning, then the timed run. Trace and metrics go to the
/// paths in `cfg` when set. An infeasible plan stops before the timed run.
RunOutcome run_scenario(const ScenarioConfig& cfg);

/// Beamforming and planning only.
RunOutcome plan_scenario(const ScenarioConfig& cfg);

nlohmann::ordered_json to_json(const GlobalSchedule& schedule);
nlohmann::ordered_json to_json(const BeamformingResult& result);
nlohmann::ordered_json to_json(const Metrics& metrics);
nlohmann::ordered_json infeasibility_report(const GlobalSchedule& schedule);

void write_metrics_csv(std::ostream& out, const Metrics& metrics);

}  // namespace fwa
