#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mergesim/cli_ops.hpp"

namespace {

using mergesim::PlannerKind;

int fail(const std::string& type, const std::string& message, int code) {
  nlohmann::json j{{"error", {{"type", type}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
  return code;
}

PlannerKind parse_planner(const std::string& s) {
  if (s == "PF_CS") return PlannerKind::PF_CS;
  if (s == "PF_SP") return PlannerKind::PF_SP;
  if (s == "PF_ISO") return PlannerKind::PF_ISO;
  throw mergesim::ValidationError("--planners", "unknown planner '" + s + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic multi-vehicle merging simulator with potential-field "
               "planning and interactive speed optimization"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::string log_path;
  std::vector<std::string> overrides;
  std::vector<std::string> planner_names = {"PF_CS", "PF_SP", "PF_ISO"};
  std::optional<std::uint64_t> seed;
  double resolution = 1.0;
  double t_snapshot = 0.0;

  std::string keys_help = "Config override keys accepted by --set key=value:\n";
  for (const auto& k : mergesim::override_keys()) keys_help += "  " + k + "\n";
  app.footer(keys_help);

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    if (needs_config)
      sub->add_option("-c,--config", config_path, "scenario JSON file")->required();
    sub->add_option("-o,--out", out_dir, "output directory");
    sub->add_option("-s,--set", overrides, "config override key=value (repeatable)");
    sub->add_option("--seed", seed, "override sim.seed");
  };

  CLI::App* run = app.add_subcommand("run", "run one scenario and write artifacts");
  add_common(run, true);

  CLI::App* compare =
      app.add_subcommand("compare", "run the scenario once per planner and rank them");
  add_common(compare, true);
  compare->add_option("-p,--planners", planner_names,
                      "planners to compare (PF_CS, PF_SP, PF_ISO)");

  CLI::App* dump = app.add_subcommand("field-dump",
                                      "sample each vehicle's potential field on a grid");
  add_common(dump, true);
  dump->add_option("-r,--resolution", resolution, "grid cell size [m]")->required();
  dump->add_option("-t,--t-snapshot", t_snapshot, "snapshot time [s], default 0");

  CLI::App* replay =
      app.add_subcommand("replay", "rebuild per-tick inboxes from an SLP NDJSON log");
  replay->add_option("-l,--log", log_path, "slp_log.ndjson from a run")->required();
  replay->add_option("-o,--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) {
      mergesim::RunArtifacts art = mergesim::cmd_run(config_path, out_dir, overrides, seed);
      std::cout << "wrote " << art.trace_csvs.size() << " traces, metrics, SLP log and "
                << art.svgs.size() << " figures to " << out_dir << "\n";
      if (art.result.aborted)
        return fail("simulation_abort", art.result.abort_reason, 1);
      return 0;
    }
    if (compare->parsed()) {
      std::vector<PlannerKind> planners;
      for (const auto& n : planner_names) planners.push_back(parse_planner(n));
      mergesim::CompareReport report =
          mergesim::cmd_compare(config_path, planners, out_dir, overrides, seed);
      std::cout << "report: " << report.report_json << "\n";
      return 0;
    }
    if (dump->parsed()) {
      auto paths =
          mergesim::cmd_field_dump(config_path, t_snapshot, resolution, out_dir, overrides);
      for (const auto& p : paths) std::cout << p << "\n";
      return 0;
    }
    if (replay->parsed()) {
      mergesim::ReplaySummary s = mergesim::cmd_replay(log_path, out_dir);
      std::cout << "replayed " << s.messages << " messages over " << s.ticks
                << " ticks; inboxes: " << s.inbox_json << "\n";
      return 0;
    }
  } catch (const mergesim::SchemaError& e) {
    return fail("schema_error", e.what(), 2);
  } catch (const mergesim::ValidationError& e) {
    return fail("validation_error", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("simulation_abort", e.what(), 1);
  }
  return 2;
}
