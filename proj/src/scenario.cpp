#include "mergesim/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mergesim {

using nlohmann::json;

namespace {

PlannerKind planner_from_string(const std::string& s) {
  if (s == "PF_CS") return PlannerKind::PF_CS;
  if (s == "PF_SP") return PlannerKind::PF_SP;
  if (s == "PF_ISO") return PlannerKind::PF_ISO;
  throw ValidationError("vehicles.planner", "unknown planner '" + s +
                                                "' (expected PF_CS, PF_SP or PF_ISO)");
}

// Missing key -> SchemaError naming it; wrong type surfaces the same way.
template <typename T>
T get(const json& j, const std::string& owner, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw SchemaError("missing key '" + owner + "." + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw SchemaError("bad value for '" + owner + "." + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  return it->get<T>();
}

int line_of_byte(const std::string& text, std::size_t byte) {
  int line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

json vehicle_to_json(const VehicleSpec& v) {
  return json{{"id", v.state.id},
              {"planner", to_string(v.planner)},
              {"x_m", v.state.x},
              {"y_m", v.state.y},
              {"psi_rad", v.state.psi},
              {"beta_rad", v.state.beta},
              {"v_mps", v.state.v},
              {"yaw_rate_radps", v.state.yaw_rate},
              {"mass_kg", v.state.mass},
              {"wheelbase_m", v.state.wheelbase},
              {"width_m", v.state.width},
              {"a_brake_max_mps2", v.state.a_brake_max},
              {"v_target_mps", v.v_target},
              {"v_limit_mps", v.v_limit},
              {"v2v_rx", v.v2v_rx}};
}

VehicleSpec vehicle_from_json(const json& j, const std::string& owner) {
  VehicleSpec v;
  v.state.id = get<std::string>(j, owner, "id");
  v.planner = planner_from_string(get<std::string>(j, owner, "planner"));
  v.state.x = get<double>(j, owner, "x_m");
  v.state.y = get<double>(j, owner, "y_m");
  v.state.psi = get_or(j, "psi_rad", 0.0);
  v.state.beta = get_or(j, "beta_rad", 0.0);
  v.state.v = get<double>(j, owner, "v_mps");
  v.state.yaw_rate = get_or(j, "yaw_rate_radps", 0.0);
  v.state.mass = get<double>(j, owner, "mass_kg");
  v.state.wheelbase = get<double>(j, owner, "wheelbase_m");
  v.state.width = get<double>(j, owner, "width_m");
  v.state.a_brake_max = get<double>(j, owner, "a_brake_max_mps2");
  v.v_target = get<double>(j, owner, "v_target_mps");
  v.v_limit = get<double>(j, owner, "v_limit_mps");
  v.v2v_rx = get_or(j, "v2v_rx", true);
  return v;
}

}  // namespace

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json j;
  j["road"] = {{"y_bottom_m", cfg.road.y_bottom},
               {"y_lane_m", cfg.road.y_lane},
               {"y_upper_m", cfg.road.y_upper},
               {"x_merge_start_m", cfg.road.x_merge_start},
               {"x_merge_end_m", cfg.road.x_merge_end},
               {"lane_width_m", cfg.road.lane_width}};
  j["vehicles"] = json::array();
  for (const auto& v : cfg.vehicles) j["vehicles"].push_back(vehicle_to_json(v));
  j["pf"] = {{"lambda", cfg.pf.lambda},
             {"x_target_m", cfg.pf.x_target},
             {"a_lane", cfg.pf.a_lane},
             {"sigma_lane_m", cfg.pf.sigma_lane},
             {"xi", cfg.pf.xi},
             {"a_obs", cfg.pf.a_obs},
             {"epsilon", cfg.pf.epsilon},
             {"u_thresh", cfg.pf.u_thresh},
             {"u_cap", cfg.pf.u_cap},
             {"dmin_mass_normalized", cfg.pf.dmin_mass_normalized}};
  j["iso"] = {{"w1", cfg.iso.w1},
              {"w2", cfg.iso.w2},
              {"w3", cfg.iso.w3},
              {"v_floor_mps", cfg.iso.v_floor},
              {"opt_tol_mps", cfg.iso.opt_tol},
              {"kappa_max_1pm", cfg.iso.kappa_max},
              {"fit_weight_decay", cfg.iso.fit_weight_decay},
              {"kkt_tol", cfg.iso.kkt_tol}};
  j["sim"] = {{"dt_s", cfg.sim.dt},
              {"horizon_n", cfg.sim.horizon_n},
              {"mu", cfg.sim.mu},
              {"gravity_mps2", cfg.sim.gravity},
              {"duration_s", cfg.sim.duration},
              {"seed", cfg.sim.seed},
              {"drop_probability", cfg.sim.drop_probability},
              {"lookahead_m", cfg.sim.lookahead},
              {"kp_speed", cfg.sim.kp_speed},
              {"a_accel_max_mps2", cfg.sim.a_accel_max},
              {"steer_max_rad", cfg.sim.steer_max},
              {"cornering_stiffness_front", cfg.sim.cf},
              {"cornering_stiffness_rear", cfg.sim.cr},
              {"yaw_inertia_kgm2", cfg.sim.yaw_inertia},
              {"finish_margin_m", cfg.sim.finish_margin},
              {"fd_step_m", cfg.sim.fd_step}};
  return j.dump(2) + "\n";
}

ScenarioConfig parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError("JSON parse failure near line " +
                      std::to_string(line_of_byte(json_text, e.byte)) + ": " + e.what());
  }

  ScenarioConfig cfg;
  const json& r = j.value("road", json::object());
  if (r.empty()) throw SchemaError("missing top-level 'road' object");
  cfg.road.y_bottom = get<double>(r, "road", "y_bottom_m");
  cfg.road.y_lane = get<double>(r, "road", "y_lane_m");
  cfg.road.y_upper = get<double>(r, "road", "y_upper_m");
  cfg.road.x_merge_start = get<double>(r, "road", "x_merge_start_m");
  cfg.road.x_merge_end = get<double>(r, "road", "x_merge_end_m");
  cfg.road.lane_width = get<double>(r, "road", "lane_width_m");

  auto vit = j.find("vehicles");
  if (vit == j.end() || !vit->is_array())
    throw SchemaError("missing top-level 'vehicles' array");
  for (std::size_t i = 0; i < vit->size(); ++i)
    cfg.vehicles.push_back(vehicle_from_json((*vit)[i], "vehicles." + std::to_string(i)));

  const json& p = j.value("pf", json::object());
  if (p.empty()) throw SchemaError("missing top-level 'pf' object");
  cfg.pf.lambda = get<double>(p, "pf", "lambda");
  cfg.pf.x_target = get<double>(p, "pf", "x_target_m");
  cfg.pf.a_lane = get<double>(p, "pf", "a_lane");
  cfg.pf.sigma_lane = get<double>(p, "pf", "sigma_lane_m");
  cfg.pf.xi = get<double>(p, "pf", "xi");
  cfg.pf.a_obs = get<double>(p, "pf", "a_obs");
  cfg.pf.epsilon = get<double>(p, "pf", "epsilon");
  cfg.pf.u_thresh = get<double>(p, "pf", "u_thresh");
  cfg.pf.u_cap = get<double>(p, "pf", "u_cap");
  cfg.pf.dmin_mass_normalized = get_or(p, "dmin_mass_normalized", true);

  const json& o = j.value("iso", json::object());
  if (o.empty()) throw SchemaError("missing top-level 'iso' object");
  cfg.iso.w1 = get<double>(o, "iso", "w1");
  cfg.iso.w2 = get<double>(o, "iso", "w2");
  cfg.iso.w3 = get<double>(o, "iso", "w3");
  cfg.iso.v_floor = get_or(o, "v_floor_mps", 0.1);
  cfg.iso.opt_tol = get_or(o, "opt_tol_mps", 1e-4);
  cfg.iso.kappa_max = get_or(o, "kappa_max_1pm", 0.08);
  cfg.iso.fit_weight_decay = get_or(o, "fit_weight_decay", 0.0);
  cfg.iso.kkt_tol = get_or(o, "kkt_tol", 1e-8);

  const json& s = j.value("sim", json::object());
  if (s.empty()) throw SchemaError("missing top-level 'sim' object");
  cfg.sim.dt = get<double>(s, "sim", "dt_s");
  cfg.sim.horizon_n = get<int>(s, "sim", "horizon_n");
  cfg.sim.mu = get<double>(s, "sim", "mu");
  cfg.sim.gravity = get_or(s, "gravity_mps2", 9.81);
  cfg.sim.duration = get<double>(s, "sim", "duration_s");
  cfg.sim.seed = get_or<std::uint64_t>(s, "seed", 1);
  cfg.sim.drop_probability = get_or(s, "drop_probability", 0.0);
  cfg.sim.lookahead = get_or(s, "lookahead_m", 12.0);
  cfg.sim.kp_speed = get_or(s, "kp_speed", 1.5);
  cfg.sim.a_accel_max = get_or(s, "a_accel_max_mps2", 3.0);
  cfg.sim.steer_max = get_or(s, "steer_max_rad", 0.5);
  cfg.sim.cf = get_or(s, "cornering_stiffness_front", 80000.0);
  cfg.sim.cr = get_or(s, "cornering_stiffness_rear", 80000.0);
  cfg.sim.yaw_inertia = get_or(s, "yaw_inertia_kgm2", 2500.0);
  cfg.sim.finish_margin = get_or(s, "finish_margin_m", 100.0);
  cfg.sim.fd_step = get_or(s, "fd_step_m", 1e-4);

  validate_scenario(cfg);
  cfg.road.derive_taper();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write scenario file '" + path + "'");
  out << scenario_to_json(cfg);
}

void validate_scenario(const ScenarioConfig& cfg) {
  auto require = [](bool ok, const char* field, const std::string& msg) {
    if (!ok) throw ValidationError(field, msg);
  };

  const RoadGeometry& r = cfg.road;
  require(r.x_merge_start < r.x_merge_end, "road.x_merge_start_m",
          "x_merge_start must be < x_merge_end");
  require(r.y_bottom < r.y_lane, "road.y_bottom_m", "must be < y_lane");
  require(r.y_lane < r.y_upper, "road.y_lane_m", "must be < y_upper");
  require(r.lane_width > 0, "road.lane_width_m", "must be > 0");

  require(!cfg.vehicles.empty(), "vehicles", "at least one vehicle required");
  for (std::size_t i = 0; i < cfg.vehicles.size(); ++i) {
    const std::string owner = "vehicles." + std::to_string(i);
    const VehicleSpec& v = cfg.vehicles[i];
    auto field = [&](const char* k) { return owner + "." + k; };
    require(!v.state.id.empty(), "vehicles.id", "vehicle id must be non-empty");
    require(v.state.v >= 0, field("v_mps").c_str(), "speed must be >= 0");
    require(v.state.mass > 0, field("mass_kg").c_str(), "must be > 0");
    require(v.state.wheelbase > 0, field("wheelbase_m").c_str(), "must be > 0");
    require(v.state.width > 0, field("width_m").c_str(), "must be > 0");
    require(v.state.a_brake_max > 0, field("a_brake_max_mps2").c_str(), "must be > 0");
    // C1 = 1 - psi^2 in the obstacle field is only meaningful for |psi| < 1 rad.
    require(std::abs(v.state.psi) < 1.0, field("psi_rad").c_str(),
            "|heading| must be < 1 rad");
    require(v.v_target >= 0, field("v_target_mps").c_str(), "must be >= 0");
    require(v.v_limit > 0, field("v_limit_mps").c_str(), "must be > 0");
    for (std::size_t k = 0; k < i; ++k)
      require(cfg.vehicles[k].state.id != v.state.id, "vehicles.id",
              "duplicate vehicle id '" + v.state.id + "'");
  }

  const PotentialParams& p = cfg.pf;
  require(p.lambda > 0, "pf.lambda", "must be > 0");
  require(p.a_lane > 0, "pf.a_lane", "must be > 0");
  require(p.sigma_lane > 0, "pf.sigma_lane_m", "must be > 0");
  require(p.xi > 0, "pf.xi", "must be > 0");
  require(p.a_obs > 0, "pf.a_obs", "must be > 0");
  require(p.u_thresh > 0 && p.u_thresh < 1, "pf.u_thresh", "must be in (0,1)");
  require(p.epsilon > 0 && p.epsilon < p.a_obs, "pf.epsilon",
          "must satisfy 0 < epsilon < a_obs");
  require(p.u_cap > 0, "pf.u_cap", "must be > 0");

  const IsoParams& w = cfg.iso;
  require(w.w1 >= 0 && w.w2 >= 0 && w.w3 >= 0, "iso.w1", "weights must be >= 0");
  require(w.w1 + w.w2 + w.w3 > 0, "iso.w1", "weights must not all be zero");
  require(w.v_floor > 0, "iso.v_floor_mps", "must be > 0");
  require(w.kappa_max > 0, "iso.kappa_max_1pm", "must be > 0");
  require(w.opt_tol > 0, "iso.opt_tol_mps", "must be > 0");

  const SimParams& s = cfg.sim;
  require(s.dt > 0, "sim.dt_s", "must be > 0");
  require(s.horizon_n >= 4, "sim.horizon_n",
          "at least 4 waypoints are required (got " + std::to_string(s.horizon_n) + ")");
  require(s.mu > 0 && s.mu <= 1.2, "sim.mu", "must be in (0, 1.2]");
  require(s.gravity > 0, "sim.gravity_mps2", "must be > 0");
  require(s.duration > 0, "sim.duration_s", "must be > 0");
  require(s.drop_probability >= 0 && s.drop_probability <= 1, "sim.drop_probability",
          "must be in [0,1]");
  require(s.lookahead > 0, "sim.lookahead_m", "must be > 0");
  require(s.kp_speed > 0, "sim.kp_speed", "must be > 0");
  require(s.a_accel_max > 0, "sim.a_accel_max_mps2", "must be > 0");
  require(s.steer_max > 0, "sim.steer_max_rad", "must be > 0");
  require(s.cf > 0 && s.cr > 0, "sim.cornering_stiffness_front", "must be > 0");
  require(s.yaw_inertia > 0, "sim.yaw_inertia_kgm2", "must be > 0");
  require(s.fd_step > 0, "sim.fd_step_m", "must be > 0");
}

ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.road = RoadGeometry{};
  cfg.road.derive_taper();

  // Initial lateral positions sit on the lane equilibria of the default field
  // so runs start without a settling transient.
  VehicleSpec ego;
  ego.state.id = "ego";
  ego.state.x = 0.0;
  ego.state.y = 1.69;
  ego.state.v = 20.0;
  ego.v_target = 20.0;
  ego.v_limit = 33.3;
  ego.planner = PlannerKind::PF_ISO;

  // Slightly ahead (urgent merge); its cruise target is below its initial
  // speed, a merge-corridor advisory the constant-speed baseline ignores.
  VehicleSpec obs;
  obs.state.id = "obstacle";
  obs.state.x = 45.0;
  obs.state.y = 5.31;
  obs.state.v = 15.0;
  obs.v_target = 13.5;
  obs.v_limit = 33.3;
  obs.planner = PlannerKind::PF_ISO;

  cfg.vehicles = {ego, obs};
  cfg.pf = PotentialParams{};
  cfg.pf.u_thresh = 0.9;
  cfg.iso = IsoParams{};
  cfg.sim = SimParams{};
  validate_scenario(cfg);
  return cfg;
}

std::string apply_overrides_to_json(const std::string& json_text,
                                    const std::vector<std::string>& overrides) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw SchemaError("JSON parse failure near line " +
                      std::to_string(line_of_byte(json_text, e.byte)) + ": " + e.what());
  }
  for (const auto& ov : overrides) {
    auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ValidationError("--set", "expected key=value, got '" + ov + "'");
    std::string key = ov.substr(0, eq);
    std::string value = ov.substr(eq + 1);
    std::string pointer = "/" + key;
    for (auto& c : pointer)
      if (c == '.') c = '/';
    json parsed;
    try {
      parsed = json::parse(value);  // numbers, bools, arrays
      if (parsed.is_object()) parsed = json(value);
    } catch (const json::parse_error&) {
      parsed = json(value);  // bare strings, e.g. planner names
    }
    try {
      j[json::json_pointer(pointer)] = parsed;
    } catch (const json::exception& e) {
      throw ValidationError(key, std::string("cannot apply override: ") + e.what());
    }
  }
  return j.dump();
}

namespace {
void collect_keys(const json& j, const std::string& prefix, std::vector<std::string>& out) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it)
      collect_keys(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i)
      collect_keys(j[i], prefix + "." + std::to_string(i), out);
  } else {
    out.push_back(prefix);
  }
}
}  // namespace

std::vector<std::string> override_keys() {
  json j = json::parse(scenario_to_json(default_scenario()));
  std::vector<std::string> keys;
  collect_keys(j, "", keys);
  return keys;
}

}  // namespace mergesim
