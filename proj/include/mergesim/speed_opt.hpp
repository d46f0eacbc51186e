#pragma once

#include <span>
#include <vector>

#include "mergesim/path_fit.hpp"
#include "mergesim/potential_field.hpp"
#include "mergesim/types.hpp"

namespace mergesim {

struct SpeedProfile {
  std::vector<double> v;     // [m/s], one per horizon step
  std::vector<double> caps;  // V_i^max, same length
  double objective = 0.0;
};

struct IsoWeights {
  double w1 = 0.0;  // efficiency
  double w2 = 0.0;  // target-speed deviation
  double w3 = 0.0;  // shared-path awareness
};

/// Physical snapshot of an SLP sender, enough to rebuild its field.
struct SlpMeta {
  double mass = 1500.0;
  double wheelbase = 2.7;
  double a_brake_max = 8.0;
  double heading = 0.0;
  double speed = 0.0;
};

/// A received shared local path: waypoints[0] is the sender's position when it
/// planned; waypoints[k] its predicted position k steps later.
struct SharedPath {
  std::vector<Vec2> waypoints;
  SlpMeta meta;
};

/// Everything the speed objective needs besides the decision variables.
struct IsoProblem {
  FieldWorld world;  // world.host is the planning vehicle
  std::vector<SharedPath> shared;
  IsoWeights weights;
  PotentialParams pf;
  double dt = 0.1;
  int n = 10;
  std::vector<double> caps;  // per-step speed cap [0, caps[i]]
  double v_target = 20.0;
  double v_floor = 0.1;
  double opt_tol = 1e-4;
};

/// Curvature-limited speed cap min(V_limit, sqrt(mu*g/|kappa|)); V_limit on a
/// straight path.
double max_speed_cap(const CubicPath& path, double v_limit, double mu, double g);

/// Obstacle field evaluated between predicted waypoints instead of vehicle
/// poses, floored at p.epsilon so its logarithm stays finite.
double slp_potential(Vec2 ego_wp, Vec2 slp_wp, const SlpMeta& sender,
                     const VehicleState& ego, const PotentialParams& p);

/// Weighted sum of travel time, target-speed deviation and ln of the shared-
/// path field. Ego waypoints are regenerated in speed-coupled mode, so every
/// term depends on the decision speeds.
double iso_objective(std::span<const double> speeds, const IsoProblem& prob);

/// Forward sweep of bracketed golden-section line searches plus one
/// coordinate-descent refinement pass. Never returns a profile worse than the
/// clipped-target profile; every v_i lies in [0, caps[i]] exactly.
SpeedProfile optimize_speeds(const IsoProblem& prob);

/// Exhaustive grid minimization over [0, caps[i]]^n, n <= 5. The parallel
/// variant distributes the outermost grid axis across OpenMP threads and
/// returns bit-identical results to the serial one.
SpeedProfile brute_force_speed_oracle(const IsoProblem& prob, int grid_points,
                                      bool parallel = false);

}  // namespace mergesim
