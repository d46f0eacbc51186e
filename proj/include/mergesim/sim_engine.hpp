#pragma once

#include <string>
#include <vector>

#include "mergesim/coordination.hpp"
#include "mergesim/scenario.hpp"
#include "mergesim/types.hpp"

namespace mergesim {

/// Lateral 2-DOF single-track parameters (longitudinal is a point mass).
struct DynParams {
  double cf = 80000.0;       // front cornering stiffness [N/rad]
  double cr = 80000.0;       // rear cornering stiffness [N/rad]
  double yaw_inertia = 2500.0;
  double a_accel_max = 3.0;
  double steer_max = 0.5;
};

/// One RK4 step of the bicycle model. accel is clipped to
/// [-a_brake_max, a_accel_max], steer to +-steer_max, speed never reverses.
/// Throws DivergenceError when the state leaves the finite range.
VehicleState vehicle_step(const VehicleState& s, double steer, double accel, double dt,
                          const DynParams& d);

/// Steady-state (beta, yaw_rate) of the linear model at constant steer/speed.
void bicycle_steady_state(const VehicleState& s, double steer, const DynParams& d,
                          double* beta_ss, double* yaw_rate_ss);

/// Geometric pure-pursuit steering toward the path point one lookahead arc
/// length ahead. Offset left of the path yields negative (rightward) steer.
double pure_pursuit_steer(const VehicleState& s, const CubicPath& path, double lookahead,
                          double steer_max);

/// Proportional speed tracking, clipped to the actuator range.
double speed_track(const VehicleState& s, double v_ref, double kp, double a_brake_max,
                   double a_accel_max);

struct TraceRow {
  double t = 0.0;
  double x = 0.0, y = 0.0;
  double psi = 0.0, beta = 0.0, yaw_rate = 0.0;
  double v = 0.0;
  double steer = 0.0, accel = 0.0;
};

struct VehicleTrace {
  std::string id;
  std::vector<TraceRow> rows;
};

struct RunMetrics {
  double max_abs_beta = 0.0;      // [rad]
  double max_abs_yaw_rate = 0.0;  // [rad/s]
  double max_abs_psi = 0.0;       // [rad]
  double min_speed = 0.0;         // [m/s]
  double path_length = 0.0;       // [m]
  double lat_osc_rms = 0.0;       // high-passed lateral deviation RMS [m]
};

struct RunResult {
  std::vector<VehicleTrace> traces;  // config order
  std::vector<RunMetrics> metrics;
  std::vector<SlpMessage> slp_log;   // emission order (tick-major)
  // inbox_log[tick][vehicle] = sender ids delivered that tick
  std::vector<std::vector<std::vector<std::string>>> inbox_log;
  bool aborted = false;
  std::string abort_reason;
  int ticks = 0;
  double min_separation = 0.0;  // smallest inter-vehicle center distance seen
  int local_min_events = 0;
};

/// Closed-loop run: exchange -> plan (per vehicle, parallel) -> track -> step,
/// until every vehicle passes the finish line or the duration elapses.
RunResult run_scenario(const ScenarioConfig& cfg);

/// Metrics from a trace alone; run_scenario uses exactly this function, so
/// recomputing from a saved CSV reproduces its numbers.
RunMetrics compute_metrics(const VehicleTrace& trace, double dt);

void write_trace_csv(const std::string& path, const VehicleTrace& trace);
VehicleTrace read_trace_csv(const std::string& path);

/// Second-order Butterworth high-pass (bilinear transform), used to isolate
/// path oscillation from the intended maneuver.
std::vector<double> highpass(const std::vector<double>& x, double fc_hz, double fs_hz);

}  // namespace mergesim
