#include "mergesim/cli_ops.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "mergesim/field_grid.hpp"
#include "mergesim/svg.hpp"

namespace mergesim {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write file '" + path + "'");
  out << body;
}

json metrics_json_obj(const RunMetrics& m) {
  return json{{"max_abs_beta_rad", m.max_abs_beta},
              {"max_abs_yaw_rate_radps", m.max_abs_yaw_rate},
              {"max_abs_psi_rad", m.max_abs_psi},
              {"min_speed_mps", m.min_speed},
              {"path_length_m", m.path_length},
              {"lat_osc_rms_m", m.lat_osc_rms}};
}

const char* kStateNames[4] = {"sideslip", "yaw_angle", "yaw_rate", "speed"};
const char* kStateLabels[4] = {"sideslip [rad]", "yaw angle [rad]", "yaw rate [rad/s]",
                               "speed [m/s]"};

double state_field(const TraceRow& r, int which) {
  switch (which) {
    case 0: return r.beta;
    case 1: return r.psi;
    case 2: return r.yaw_rate;
    default: return r.v;
  }
}

const char* series_color(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b"};
  return colors[i % 6];
}

void plot_paths(const std::string& path, const ScenarioConfig& cfg,
                const std::vector<VehicleTrace>& traces, const std::string& title) {
  LinePlot plot(title, "x [m]", "y [m]");
  plot.add_band(cfg.road.x_merge_start, cfg.road.x_merge_end, "#ffcc66");

  // Road edges.
  double x_end = cfg.road.x_merge_end + cfg.sim.finish_margin;
  std::vector<Vec2> lower, upper, divider;
  for (double x = 0.0; x <= x_end; x += 2.0) {
    EdgePair e = road_edge_y(cfg.road, x);
    lower.push_back({x, e.y_lower});
    upper.push_back({x, e.y_upper});
    if (x < cfg.road.x_merge_start) divider.push_back({x, cfg.road.y_lane});
  }
  plot.add_series("road edge", lower, "#444444");
  plot.add_series("road edge", upper, "#444444");
  plot.add_series("lane divider", divider, "#999999", true);

  for (std::size_t i = 0; i < traces.size(); ++i) {
    std::vector<Vec2> pts;
    for (const auto& r : traces[i].rows) pts.push_back({r.x, r.y});
    plot.add_series(traces[i].id, pts, series_color(i), i % 2 == 1);
  }
  plot.write(path);
}

void plot_state(const std::string& path, const std::vector<VehicleTrace>& traces,
                int which, const std::string& title) {
  LinePlot plot(title, "t [s]", kStateLabels[which]);
  for (std::size_t i = 0; i < traces.size(); ++i) {
    std::vector<Vec2> pts;
    for (const auto& r : traces[i].rows) pts.push_back({r.t, state_field(r, which)});
    plot.add_series(traces[i].id, pts, series_color(i), i % 2 == 1);
  }
  plot.write(path);
}

}  // namespace

ScenarioConfig load_with_overrides(const std::string& config_path,
                                   const std::vector<std::string>& overrides,
                                   std::optional<std::uint64_t> seed) {
  std::string text = read_file(config_path);
  std::vector<std::string> all = overrides;
  if (seed) all.push_back("sim.seed=" + std::to_string(*seed));
  if (!all.empty()) text = apply_overrides_to_json(text, all);
  return parse_scenario(text);
}

std::string metrics_to_json(const ScenarioConfig& cfg, const RunResult& result) {
  json j;
  j["aborted"] = result.aborted;
  if (result.aborted) j["abort_reason"] = result.abort_reason;
  j["ticks"] = result.ticks;
  j["min_separation_m"] = result.min_separation;
  j["local_min_events"] = result.local_min_events;
  j["vehicles"] = json::object();
  for (std::size_t i = 0; i < cfg.vehicles.size(); ++i)
    j["vehicles"][cfg.vehicles[i].state.id] = metrics_json_obj(result.metrics[i]);
  return j.dump(2) + "\n";
}

void write_slp_log(const std::string& path, const ScenarioConfig& cfg,
                   const std::vector<SlpMessage>& log) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write SLP log '" + path + "'");
  json header{{"type", "header"},
              {"seed", cfg.sim.seed},
              {"drop_probability", cfg.sim.drop_probability},
              {"vehicles", json::array()}};
  for (const auto& v : cfg.vehicles) header["vehicles"].push_back(v.state.id);
  out << header.dump() << "\n";
  for (const auto& m : log) out << slp_to_json_line(m) << "\n";
}

RunArtifacts cmd_run(const std::string& config_path, const std::string& out_dir,
                     const std::vector<std::string>& overrides,
                     std::optional<std::uint64_t> seed) {
  RunArtifacts art;
  art.cfg = load_with_overrides(config_path, overrides, seed);
  fs::create_directories(out_dir);
  art.result = run_scenario(art.cfg);

  for (std::size_t i = 0; i < art.cfg.vehicles.size(); ++i) {
    std::string p = out_dir + "/trace_" + art.cfg.vehicles[i].state.id + ".csv";
    write_trace_csv(p, art.result.traces[i]);
    art.trace_csvs.push_back(p);
  }
  art.metrics_json = out_dir + "/metrics.json";
  write_file(art.metrics_json, metrics_to_json(art.cfg, art.result));
  art.slp_log = out_dir + "/slp_log.ndjson";
  write_slp_log(art.slp_log, art.cfg, art.result.slp_log);

  std::string paths_svg = out_dir + "/paths.svg";
  plot_paths(paths_svg, art.cfg, art.result.traces, "vehicle paths");
  art.svgs.push_back(paths_svg);
  for (int which = 0; which < 4; ++which) {
    std::string p = out_dir + "/" + kStateNames[which] + ".svg";
    plot_state(p, art.result.traces, which, std::string(kStateNames[which]) + " vs time");
    art.svgs.push_back(p);
  }
  return art;
}

CompareReport cmd_compare(const std::string& config_path,
                          const std::vector<PlannerKind>& planners,
                          const std::string& out_dir,
                          const std::vector<std::string>& overrides,
                          std::optional<std::uint64_t> seed) {
  if (planners.size() < 2)
    throw ValidationError("--planners", "compare needs at least 2 planners");
  CompareReport report;
  report.planners = planners;
  fs::create_directories(out_dir);

  ScenarioConfig base = load_with_overrides(config_path, overrides, seed);
  std::vector<std::vector<VehicleTrace>> all_traces;

  for (PlannerKind kind : planners) {
    ScenarioConfig cfg = base;
    for (auto& v : cfg.vehicles) v.planner = kind;
    std::string sub = out_dir + "/" + to_string(kind);
    fs::create_directories(sub);
    RunResult result = run_scenario(cfg);

    for (std::size_t i = 0; i < cfg.vehicles.size(); ++i) {
      std::string p = sub + "/trace_" + cfg.vehicles[i].state.id + ".csv";
      write_trace_csv(p, result.traces[i]);
      report.artifacts.push_back(p);
      report.metrics[to_string(kind)][cfg.vehicles[i].state.id] = result.metrics[i];
    }
    std::string mp = sub + "/metrics.json";
    write_file(mp, metrics_to_json(cfg, result));
    report.artifacts.push_back(mp);
    write_slp_log(sub + "/slp_log.ndjson", cfg, result.slp_log);
    report.artifacts.push_back(sub + "/slp_log.ndjson");
    all_traces.push_back(result.traces);
    if (result.aborted)
      throw DivergenceError("planner " + std::string(to_string(kind)) +
                            " aborted: " + result.abort_reason);
  }

  // Ordinal verdicts: smallest value wins each metric, per vehicle.
  auto metric_value = [](const RunMetrics& m, int k) {
    switch (k) {
      case 0: return m.max_abs_beta;
      case 1: return m.max_abs_yaw_rate;
      case 2: return m.max_abs_psi;
      case 3: return m.path_length;
      default: return m.lat_osc_rms;
    }
  };
  const char* metric_names[5] = {"max_abs_beta", "max_abs_yaw_rate", "max_abs_psi",
                                 "path_length", "lat_osc_rms"};
  for (const auto& veh : base.vehicles) {
    const std::string& id = veh.state.id;
    for (int k = 0; k < 5; ++k) {
      double best = std::numeric_limits<double>::infinity();
      std::string who;
      for (PlannerKind kind : planners) {
        double val = metric_value(report.metrics[to_string(kind)][id], k);
        if (val < best) {
          best = val;
          who = to_string(kind);
        }
      }
      report.verdicts[id][metric_names[k]] = who;
    }
  }

  // Combined paths figure: one curve per (planner, vehicle).
  LinePlot plot("paths by planner", "x [m]", "y [m]");
  plot.add_band(base.road.x_merge_start, base.road.x_merge_end, "#ffcc66");
  double x_end = base.road.x_merge_end + base.sim.finish_margin;
  std::vector<Vec2> lower, upper;
  for (double x = 0.0; x <= x_end; x += 2.0) {
    EdgePair e = road_edge_y(base.road, x);
    lower.push_back({x, e.y_lower});
    upper.push_back({x, e.y_upper});
  }
  plot.add_series("road edge", lower, "#444444");
  plot.add_series("road edge", upper, "#444444");
  for (std::size_t pi = 0; pi < planners.size(); ++pi)
    for (std::size_t vi = 0; vi < all_traces[pi].size(); ++vi) {
      std::vector<Vec2> pts;
      for (const auto& r : all_traces[pi][vi].rows) pts.push_back({r.x, r.y});
      plot.add_series(std::string(to_string(planners[pi])) + " " + all_traces[pi][vi].id,
                      pts, series_color(pi), vi % 2 == 1);
    }
  std::string combined = out_dir + "/compare_paths.svg";
  plot.write(combined);
  report.artifacts.push_back(combined);

  json j;
  j["planners"] = json::array();
  for (PlannerKind k : planners) j["planners"].push_back(to_string(k));
  for (const auto& [planner, by_vehicle] : report.metrics)
    for (const auto& [id, m] : by_vehicle) j["metrics"][planner][id] = metrics_json_obj(m);
  for (const auto& [id, by_metric] : report.verdicts)
    for (const auto& [metric, who] : by_metric) j["verdicts"][id][metric] = who;
  j["artifacts"] = report.artifacts;
  report.report_json = out_dir + "/compare_report.json";
  write_file(report.report_json, j.dump(2) + "\n");
  report.artifacts.push_back(report.report_json);
  return report;
}

std::vector<std::string> cmd_field_dump(const std::string& config_path, double t_snapshot,
                                        double resolution, const std::string& out_dir,
                                        const std::vector<std::string>& overrides) {
  if (resolution <= 0.0) throw ValidationError("--resolution", "must be > 0");
  ScenarioConfig cfg = load_with_overrides(config_path, overrides, std::nullopt);
  if (t_snapshot < 0.0 || t_snapshot > cfg.sim.duration)
    throw ValidationError("--t", "snapshot time outside [0, duration]");
  fs::create_directories(out_dir);

  // Advance the closed loop to the snapshot tick, then freeze the states.
  ScenarioConfig trimmed = cfg;
  std::vector<VehicleState> states;
  if (t_snapshot == 0.0) {
    for (const auto& v : cfg.vehicles) states.push_back(v.state);
  } else {
    trimmed.sim.duration = t_snapshot;
    RunResult result = run_scenario(trimmed);
    if (result.aborted)
      throw DivergenceError("run aborted before snapshot: " + result.abort_reason);
    for (const auto& tr : result.traces) {
      const TraceRow& r = tr.rows.back();
      VehicleState s;
      s.id = tr.id;
      s.x = r.x;
      s.y = r.y;
      s.psi = r.psi;
      s.beta = r.beta;
      s.yaw_rate = r.yaw_rate;
      s.v = r.v;
      states.push_back(s);
    }
    // carry over physical parameters
    for (std::size_t i = 0; i < states.size(); ++i) {
      states[i].mass = cfg.vehicles[i].state.mass;
      states[i].wheelbase = cfg.vehicles[i].state.wheelbase;
      states[i].width = cfg.vehicles[i].state.width;
      states[i].a_brake_max = cfg.vehicles[i].state.a_brake_max;
    }
  }

  GridSpec spec;
  spec.x0 = 0.0;
  spec.x1 = cfg.road.x_merge_end + cfg.sim.finish_margin;
  spec.y0 = cfg.road.y_bottom - 1.0;
  spec.y1 = cfg.road.y_upper + 1.0;
  spec.resolution = resolution;

  std::vector<std::string> paths;
  for (std::size_t i = 0; i < states.size(); ++i) {
    FieldWorld world;
    world.road = cfg.road;
    world.host = states[i];
    for (std::size_t j = 0; j < states.size(); ++j)
      if (j != i) world.others.push_back(states[j]);
    FieldGrid grid = eval_field_grid(world, cfg.pf, spec);
    std::string p = out_dir + "/field_" + states[i].id + ".csv";
    write_grid_csv(p, grid);
    paths.push_back(p);
  }
  return paths;
}

ReplaySummary cmd_replay(const std::string& log_path, const std::string& out_dir) {
  std::ifstream in(log_path);
  if (!in) throw SchemaError("cannot open SLP log '" + log_path + "'");
  fs::create_directories(out_dir);

  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty SLP log");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("bad SLP log header: ") + e.what());
  }
  if (header.value("type", "") != "header")
    throw SchemaError("SLP log must start with a header line");
  std::uint64_t seed = header.at("seed").get<std::uint64_t>();
  double drop = header.at("drop_probability").get<double>();
  std::vector<std::string> ids = header.at("vehicles").get<std::vector<std::string>>();

  // Group messages by tick, preserving emission order.
  std::vector<std::vector<SlpMessage>> by_tick;
  int messages = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    SlpMessage m = slp_from_json_line(line);
    if (m.tick < 0) throw SchemaError("negative tick in SLP log");
    if (static_cast<std::size_t>(m.tick) >= by_tick.size())
      by_tick.resize(static_cast<std::size_t>(m.tick) + 1);
    by_tick[static_cast<std::size_t>(m.tick)].push_back(m);
    ++messages;
  }

  // Feed the same bus code path: messages of tick t form the inboxes of t+1.
  Rng rng(seed);
  json manifest = json::array();
  std::vector<SlpMessage> pending;
  for (std::size_t tick = 0; tick <= by_tick.size(); ++tick) {
    auto inboxes = bus_exchange(pending, ids, drop, rng);
    json entry{{"tick", tick}, {"inboxes", json::object()}};
    for (std::size_t i = 0; i < ids.size(); ++i) {
      json senders = json::array();
      for (const auto& m : inboxes[i]) senders.push_back(m.sender);
      entry["inboxes"][ids[i]] = senders;
    }
    manifest.push_back(entry);
    if (tick < by_tick.size()) pending = by_tick[tick];
  }

  ReplaySummary summary;
  summary.ticks = static_cast<int>(by_tick.size());
  summary.messages = messages;
  summary.inbox_json = out_dir + "/replay_inboxes.json";
  write_file(summary.inbox_json, manifest.dump(2) + "\n");
  return summary;
}

}  // namespace mergesim
