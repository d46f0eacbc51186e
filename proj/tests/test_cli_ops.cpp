#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "helpers.hpp"
#include "mergesim/cli_ops.hpp"
#include "mergesim/field_grid.hpp"

using namespace mergesim;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string config_path() {
  return std::string(MERGESIM_CONFIG_DIR) + "/default_merge.json";
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cmd_run emits the documented artifact manifest") {
  fs::path out = fresh_dir("mergesim_run");
  RunArtifacts art =
      cmd_run(config_path(), out.string(), {"sim.duration_s=5"}, std::nullopt);
  CHECK(art.trace_csvs.size() == 2);
  CHECK(art.svgs.size() == 5);
  for (const auto& p : art.trace_csvs) CHECK(fs::exists(p));
  for (const auto& p : art.svgs) CHECK(fs::exists(p));
  CHECK(fs::exists(art.metrics_json));
  CHECK(fs::exists(art.slp_log));
  CHECK_FALSE(art.result.aborted);
  fs::remove_all(out);
}

TEST_CASE("w3=0 override reproduces the PF_SP run exactly") {
  fs::path out_a = fresh_dir("mergesim_w3zero");
  fs::path out_b = fresh_dir("mergesim_sp");
  RunArtifacts a = cmd_run(config_path(), out_a.string(),
                           {"sim.duration_s=6", "iso.w3=0"}, std::nullopt);
  RunArtifacts b = cmd_run(config_path(), out_b.string(),
                           {"sim.duration_s=6", "vehicles.0.planner=PF_SP",
                            "vehicles.1.planner=PF_SP"},
                           std::nullopt);
  CHECK(slurp(a.metrics_json) == slurp(b.metrics_json));
  for (std::size_t i = 0; i < a.trace_csvs.size(); ++i)
    CHECK(slurp(a.trace_csvs[i]) == slurp(b.trace_csvs[i]));
  fs::remove_all(out_a);
  fs::remove_all(out_b);
}

TEST_CASE("bad config path raises a schema error naming the path") {
  try {
    cmd_run("/nonexistent/nope.json", fresh_dir("mergesim_none").string(), {},
            std::nullopt);
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/nope.json") != std::string::npos);
  }
}

TEST_CASE("cmd_compare rejects a single planner") {
  CHECK_THROWS_AS(cmd_compare(config_path(), {PlannerKind::PF_ISO},
                              fresh_dir("mergesim_one").string()),
                  ValidationError);
}

TEST_CASE("compare report round-trips through its JSON") {
  fs::path out = fresh_dir("mergesim_cmp");
  CompareReport report =
      cmd_compare(config_path(), {PlannerKind::PF_CS, PlannerKind::PF_ISO}, out.string(),
                  {"sim.duration_s=6"});
  json j = json::parse(slurp(report.report_json));
  CHECK(j["planners"].size() == 2);
  for (const auto& [planner, by_vehicle] : report.metrics)
    for (const auto& [id, m] : by_vehicle) {
      CHECK(j["metrics"][planner][id]["max_abs_beta_rad"].get<double>() ==
            m.max_abs_beta);
      CHECK(j["metrics"][planner][id]["path_length_m"].get<double>() == m.path_length);
    }
  fs::remove_all(out);
}

TEST_CASE("field dump: additivity on an empty road, peak at the obstacle, row counts") {
  fs::path out = fresh_dir("mergesim_field");

  // empty road: grid equals attractive + road terms
  auto paths = cmd_field_dump(config_path(), 0.0, 2.0, out.string(),
                              {"vehicles.1.x_m=10000", "pf.x_target_m=20000"});
  REQUIRE(paths.size() == 2);
  ScenarioConfig cfg = load_with_overrides(
      config_path(), {"vehicles.1.x_m=10000", "pf.x_target_m=20000"}, std::nullopt);
  std::ifstream in(paths[0]);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x_m,y_m,u");
  std::string line;
  int checked = 0;
  while (std::getline(in, line) && checked < 200) {
    std::istringstream ss(line);
    std::string sx, sy, su;
    std::getline(ss, sx, ',');
    std::getline(ss, sy, ',');
    std::getline(ss, su, ',');
    double x = std::stod(sx), y = std::stod(sy), u = std::stod(su);
    if (x > 900.0) continue;  // far-away parked vehicle contributes there
    double expected = attractive_potential(x, cfg.pf) +
                      lane_divider_potential(x, y, cfg.road, cfg.pf) +
                      road_edge_potential(x, y, cfg.road,
                                          cfg.vehicles[0].state.width, cfg.pf);
    CHECK(u == doctest::Approx(expected).epsilon(1e-9));
    ++checked;
  }
  CHECK(checked > 0);
  fs::remove_all(out);

  // obstacle peak: grid argmax of (field with obstacle - field without) sits
  // at the obstacle within one cell
  ScenarioConfig base = default_scenario();
  FieldWorld with;
  with.road = base.road;
  with.host = base.vehicles[0].state;
  with.others = {base.vehicles[1].state};
  FieldWorld without = with;
  without.others.clear();
  GridSpec spec{0.0, 400.0, base.road.y_bottom, base.road.y_upper, 0.5};
  FieldGrid g1 = eval_field_grid(with, base.pf, spec);
  FieldGrid g0 = eval_field_grid(without, base.pf, spec);
  double best = -1.0;
  double bx = 0, by = 0;
  for (int iy = 0; iy < g1.ny; ++iy)
    for (int ix = 0; ix < g1.nx; ++ix) {
      double diff = g1.at(ix, iy) - g0.at(ix, iy);
      if (diff > best) {
        best = diff;
        bx = g1.x_at(ix);
        by = g1.y_at(iy);
      }
    }
  CHECK(std::abs(bx - base.vehicles[1].state.x) <= spec.resolution + 1e-9);
  CHECK(std::abs(by - base.vehicles[1].state.y) <= spec.resolution + 1e-9);

  // halving the cell size quadruples the interior node count (one shared
  // boundary node per axis keeps it from being exact on open grids)
  GridSpec coarse{0.0, 100.0, 0.0, 7.0, 1.0};
  GridSpec fine{0.0, 100.0, 0.0, 7.0, 0.5};
  FieldGrid gc = eval_field_grid_serial(without, base.pf, coarse);
  FieldGrid gf = eval_field_grid_serial(without, base.pf, fine);
  CHECK((gf.nx - 1) == 2 * (gc.nx - 1));
  CHECK((gf.ny - 1) == 2 * (gc.ny - 1));
  CHECK((gf.nx - 1) * (gf.ny - 1) == 4 * (gc.nx - 1) * (gc.ny - 1));
}

TEST_CASE("grid kernels: parallel equals serial bit for bit") {
  ScenarioConfig base = default_scenario();
  FieldWorld world;
  world.road = base.road;
  world.host = base.vehicles[0].state;
  world.others = {base.vehicles[1].state};
  GridSpec spec{0.0, 250.0, -1.0, 8.0, 0.4};
  FieldGrid serial = eval_field_grid_serial(world, base.pf, spec);
  FieldGrid parallel = eval_field_grid(world, base.pf, spec);
  CHECK(serial.u == parallel.u);
}

TEST_CASE("snapshot beyond the configured duration is a range error") {
  CHECK_THROWS_AS(cmd_field_dump(config_path(), 1e6, 1.0,
                                 fresh_dir("mergesim_far").string(), {}),
                  ValidationError);
}

TEST_CASE("replay reproduces the run's inboxes exactly") {
  fs::path out = fresh_dir("mergesim_replay");
  RunArtifacts art = cmd_run(config_path(), out.string(),
                             {"sim.duration_s=4", "sim.drop_probability=0.4"},
                             std::nullopt);
  ReplaySummary summary = cmd_replay(art.slp_log, out.string());
  json manifest = json::parse(slurp(summary.inbox_json));

  // the manifest covers every simulated tick; senders must match the live log
  REQUIRE(manifest.size() >= art.result.inbox_log.size());
  for (std::size_t t = 0; t < art.result.inbox_log.size(); ++t) {
    for (std::size_t i = 0; i < art.cfg.vehicles.size(); ++i) {
      const std::string& id = art.cfg.vehicles[i].state.id;
      auto senders = manifest[t]["inboxes"][id].get<std::vector<std::string>>();
      CHECK(senders == art.result.inbox_log[t][i]);
    }
  }
  fs::remove_all(out);
}
