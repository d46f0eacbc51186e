#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "helpers.hpp"
#include "mergesim/scenario.hpp"

using namespace mergesim;

TEST_CASE("road_edge_y piecewise shape") {
  RoadGeometry r;
  r.derive_taper();

  CHECK(road_edge_y(r, r.x_merge_start).y_lower == doctest::Approx(r.y_bottom));
  CHECK(road_edge_y(r, r.x_merge_end).y_lower == doctest::Approx(r.y_lane));
  double mid = 0.5 * (r.x_merge_start + r.x_merge_end);
  CHECK(road_edge_y(r, mid).y_lower ==
        doctest::Approx(0.5 * (r.y_bottom + r.y_lane)).epsilon(1e-12));
  CHECK(road_edge_y(r, 10.0).y_lower == r.y_bottom);
  CHECK(road_edge_y(r, 500.0).y_lower == r.y_lane);
  CHECK(road_edge_y(r, 123.0).y_upper == r.y_upper);
}

TEST_CASE("road_edge_y is Lipschitz-continuous in x") {
  RoadGeometry r;
  r.derive_taper();
  const double delta = 1e-6;
  for (double x = 100.0; x <= 350.0; x += 0.37) {
    double a = road_edge_y(r, x).y_lower;
    double b = road_edge_y(r, x + delta).y_lower;
    CHECK(std::abs(b - a) <= std::abs(r.k_sl) * delta + 1e-12);
  }
}

TEST_CASE("taper line touches both endpoints") {
  RoadGeometry r;
  r.y_bottom = -1.0;
  r.y_lane = 4.0;
  r.x_merge_start = 100.0;
  r.x_merge_end = 300.0;
  r.derive_taper();
  CHECK(r.k_sl * r.x_merge_start + r.b == doctest::Approx(r.y_bottom).epsilon(1e-12));
  CHECK(r.k_sl * r.x_merge_end + r.b == doctest::Approx(r.y_lane).epsilon(1e-12));
}

TEST_CASE("default scenario matches the documented setup") {
  ScenarioConfig cfg = default_scenario();
  REQUIRE(cfg.vehicles.size() == 2);
  CHECK(cfg.vehicles[0].state.v == 20.0);
  CHECK(cfg.vehicles[1].state.v == 15.0);
  // ego below the divider, obstacle above it
  CHECK(cfg.vehicles[0].state.y < cfg.road.y_lane);
  CHECK(cfg.vehicles[1].state.y > cfg.road.y_lane);
}

TEST_CASE("default scenario file loads and equals the built-in default") {
  std::string path = std::string(MERGESIM_CONFIG_DIR) + "/default_merge.json";
  ScenarioConfig file_cfg = load_scenario(path);
  ScenarioConfig code_cfg = default_scenario();
  CHECK(scenario_to_json(file_cfg) == scenario_to_json(code_cfg));
}

TEST_CASE("scenario JSON round-trips bit-identically") {
  ScenarioConfig cfg = default_scenario();
  cfg.pf.lambda = 0.016180339887498949;  // awkward mantissas on purpose
  cfg.sim.dt = 0.09999999999999998;
  cfg.vehicles[0].state.x = 1.0 / 3.0;

  std::string path = (std::filesystem::temp_directory_path() / "mergesim_rt.json").string();
  save_scenario(cfg, path);
  ScenarioConfig back = load_scenario(path);
  CHECK(back.pf.lambda == cfg.pf.lambda);
  CHECK(back.sim.dt == cfg.sim.dt);
  CHECK(back.vehicles[0].state.x == cfg.vehicles[0].state.x);
  CHECK(scenario_to_json(back) == scenario_to_json(cfg));
  std::remove(path.c_str());
}

TEST_CASE("validation rejects horizon below 4, naming the field") {
  ScenarioConfig cfg = default_scenario();
  cfg.sim.horizon_n = 3;
  try {
    validate_scenario(cfg);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "sim.horizon_n");
  }
}

TEST_CASE("validation rejects inverted merge interval") {
  ScenarioConfig cfg = default_scenario();
  cfg.road.x_merge_start = cfg.road.x_merge_end + 1.0;
  CHECK_THROWS_AS(validate_scenario(cfg), ValidationError);
}

TEST_CASE("validation rejects headings at or past 1 rad") {
  ScenarioConfig cfg = default_scenario();
  cfg.vehicles[1].state.psi = 1.05;
  CHECK_THROWS_AS(validate_scenario(cfg), ValidationError);
}

TEST_CASE("parse failure reports line context") {
  try {
    parse_scenario("{\n  \"road\": {\n  oops\n}");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("overrides rewrite nested keys and vehicle entries") {
  std::string text = scenario_to_json(default_scenario());
  std::string changed =
      apply_overrides_to_json(text, {"iso.w3=0", "vehicles.1.v_mps=12.5",
                                     "vehicles.0.planner=PF_CS"});
  ScenarioConfig cfg = parse_scenario(changed);
  CHECK(cfg.iso.w3 == 0.0);
  CHECK(cfg.vehicles[1].state.v == 12.5);
  CHECK(cfg.vehicles[0].planner == PlannerKind::PF_CS);
}

TEST_CASE("override_keys covers the documented groups") {
  auto keys = override_keys();
  auto has = [&](const std::string& k) {
    return std::find(keys.begin(), keys.end(), k) != keys.end();
  };
  CHECK(has("pf.a_obs"));
  CHECK(has("iso.w3"));
  CHECK(has("sim.dt_s"));
  CHECK(has("road.x_merge_start_m"));
  CHECK(has("vehicles.0.v_mps"));
}
