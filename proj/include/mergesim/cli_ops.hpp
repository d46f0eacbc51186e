#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mergesim/scenario.hpp"
#include "mergesim/sim_engine.hpp"

namespace mergesim {

struct RunArtifacts {
  std::vector<std::string> trace_csvs;
  std::string metrics_json;
  std::string slp_log;
  std::vector<std::string> svgs;
  RunResult result;
  ScenarioConfig cfg;
};

/// Per-planner metrics and which planner minimized each metric, per vehicle.
struct CompareReport {
  std::vector<PlannerKind> planners;
  // metrics[planner name][vehicle id]
  std::map<std::string, std::map<std::string, RunMetrics>> metrics;
  // verdicts[vehicle id][metric name] = winning planner
  std::map<std::string, std::map<std::string, std::string>> verdicts;
  std::vector<std::string> artifacts;
  std::string report_json;
};

/// Load + override + validate; shared by every command.
ScenarioConfig load_with_overrides(const std::string& config_path,
                                   const std::vector<std::string>& overrides,
                                   std::optional<std::uint64_t> seed);

/// Run one scenario, writing trace CSVs, metrics JSON, the SLP NDJSON log and
/// the path/state SVG plots into out_dir.
RunArtifacts cmd_run(const std::string& config_path, const std::string& out_dir,
                     const std::vector<std::string>& overrides = {},
                     std::optional<std::uint64_t> seed = std::nullopt);

/// Run the scenario once per planner (same seed), all vehicles forced to that
/// planner; writes per-planner artifacts, the report JSON and a combined
/// paths SVG.
CompareReport cmd_compare(const std::string& config_path,
                          const std::vector<PlannerKind>& planners,
                          const std::string& out_dir,
                          const std::vector<std::string>& overrides = {},
                          std::optional<std::uint64_t> seed = std::nullopt);

/// Simulate up to the snapshot time, then dump each vehicle's universal
/// potential on a grid (one CSV per vehicle). Returns the CSV paths.
std::vector<std::string> cmd_field_dump(const std::string& config_path, double t_snapshot,
                                        double resolution, const std::string& out_dir,
                                        const std::vector<std::string>& overrides = {});

struct ReplaySummary {
  int ticks = 0;
  int messages = 0;
  std::string inbox_json;  // path of the reconstructed inbox manifest
};

/// Rebuild per-tick inboxes from an SLP NDJSON log through the same bus code
/// path (header line carries seed/drop settings) and write them as JSON.
ReplaySummary cmd_replay(const std::string& log_path, const std::string& out_dir);

/// NDJSON writer used by cmd_run: header line + one message per line.
void write_slp_log(const std::string& path, const ScenarioConfig& cfg,
                   const std::vector<SlpMessage>& log);

std::string metrics_to_json(const ScenarioConfig& cfg, const RunResult& result);

}  // namespace mergesim
