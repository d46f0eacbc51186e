#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mergesim/types.hpp"

namespace mergesim {

/// One vehicle entry: initial state plus its planner and speed targets.
struct VehicleSpec {
  VehicleState state;
  PlannerKind planner = PlannerKind::PF_ISO;
  double v_target = 20.0;  // [m/s]
  double v_limit = 33.3;   // [m/s]
  bool v2v_rx = true;      // set false to ablate SLP reception for this vehicle
};

struct IsoParams {
  double w1 = 0.5;    // efficiency
  double w2 = 0.25;   // target-speed deviation
  double w3 = 1.0;    // shared-path awareness
  double v_floor = 0.1;      // [m/s], floors 1/v and the coupled step length
  double opt_tol = 1e-4;     // golden-section tolerance [m/s]
  double kappa_max = 0.06;   // curvature bound behind the fit coefficient box [1/m]
  double fit_weight_decay = 0.0;  // 0 = uniform fit weights
  double kkt_tol = 1e-8;
};

struct SimParams {
  double dt = 0.1;         // [s]
  int horizon_n = 10;      // waypoint count per plan
  double mu = 0.9;         // tire-road friction
  double gravity = 9.81;   // [m/s^2]
  double duration = 60.0;  // [s] backstop; runs usually end at the finish line
  std::uint64_t seed = 1;
  double drop_probability = 0.0;  // V2V message drop chance per delivery
  double lookahead = 12.0;        // pure-pursuit lookahead [m]
  double kp_speed = 1.5;          // speed-tracking gain [1/s]
  double a_accel_max = 3.0;       // [m/s^2]
  double steer_max = 0.5;         // [rad]
  double cf = 80000.0;            // front cornering stiffness [N/rad]
  double cr = 80000.0;            // rear cornering stiffness [N/rad]
  double yaw_inertia = 2500.0;    // [kg m^2]
  double finish_margin = 100.0;   // finish line = x_merge_end + margin [m]
  double fd_step = 1e-4;          // finite-difference step for the gradient oracle [m]
};

struct ScenarioConfig {
  RoadGeometry road;
  std::vector<VehicleSpec> vehicles;
  PotentialParams pf;
  IsoParams iso;
  SimParams sim;
};

/// Parse + validate a scenario JSON file. Throws SchemaError with line context
/// on malformed input, ValidationError naming the offending field otherwise.
ScenarioConfig load_scenario(const std::string& path);

/// Parse + validate from an in-memory JSON string (same contract).
ScenarioConfig parse_scenario(const std::string& json_text);

/// Serialize; load_scenario(save_scenario(c)) round-trips all numerics bit-identically.
void save_scenario(const ScenarioConfig& cfg, const std::string& path);
std::string scenario_to_json(const ScenarioConfig& cfg);

/// Check every config invariant; throws ValidationError naming the field.
void validate_scenario(const ScenarioConfig& cfg);

/// The default two-vehicle urgent-merge scenario (ego 20 m/s lower lane,
/// obstacle 15 m/s upper lane). Road coordinates are tool defaults, not
/// measured ground truth.
ScenarioConfig default_scenario();

/// Dotted-path config override, e.g. "iso.w3=0" or "vehicles.0.v_mps=18".
/// Applied to the JSON document before validation.
std::string apply_overrides_to_json(const std::string& json_text,
                                    const std::vector<std::string>& overrides);

/// Every key accepted by --set, for --help output.
std::vector<std::string> override_keys();

}  // namespace mergesim
