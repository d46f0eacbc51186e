#pragma once

#include <span>
#include <vector>

#include "mergesim/types.hpp"

namespace mergesim {

struct Force2 {
  double fx = 0.0;
  double fy = 0.0;
};

/// Local waypoints walked along the virtual-force direction. `points` excludes
/// the start pose; step_lengths[i] is the length of the step that produced
/// points[i].
struct WaypointQueue {
  std::vector<Vec2> points;
  std::vector<double> step_lengths;
};

/// The world as one vehicle sees it when evaluating its field: the road, its
/// own state (width for edge offsets, speed/mass for braking distances) and
/// everybody else.
struct FieldWorld {
  RoadGeometry road;
  VehicleState host;
  std::vector<VehicleState> others;
};

/// Quadratic pull toward the longitudinal target.
double attractive_potential(double x, const PotentialParams& p);

/// Gaussian ridge on the lane divider; zero at and past the merge-taper start,
/// where no divider exists.
double lane_divider_potential(double x, double y, const RoadGeometry& road,
                              const PotentialParams& p);

/// Inverse-square barriers on both road edges, offset half a vehicle width
/// toward the interior; clamped at p.u_cap inside the offset band.
double road_edge_potential(double x, double y, const RoadGeometry& road,
                           double veh_width, const PotentialParams& p);

/// Relative braking margin between host and obstacle, floored at the mean
/// wheelbase so the obstacle field stays well defined.
double min_braking_distance(const VehicleState& host, const VehicleState& obs,
                            bool mass_normalized);

/// Heading-skewed exponential hill around an obstacle vehicle.
double obstacle_potential(double px, double py, const VehicleState& obs,
                          const VehicleState& host, const PotentialParams& p);

/// Sum of attractive, lane-divider, road-edge and all obstacle terms.
double universal_potential(double px, double py, const FieldWorld& w,
                           const PotentialParams& p);

/// Negative analytic gradient of the universal field. Throws NumericalError if
/// any component is non-finite.
Force2 virtual_force(double px, double py, const FieldWorld& w, const PotentialParams& p);

/// atan2 of the force; throws LocalMinimumError(−1) on vanishing force.
double reference_heading(const Force2& f);

/// Fixed-step waypoint iteration: n steps of length step_len.
WaypointQueue generate_waypoints(const VehicleState& start, const FieldWorld& w,
                                 const PotentialParams& p, double step_len, int n);

/// Speed-coupled iteration: step i has length speeds[i]*dt.
WaypointQueue generate_waypoints(const VehicleState& start, const FieldWorld& w,
                                 const PotentialParams& p, std::span<const double> speeds,
                                 double dt);

/// Same iterations but a vanishing force holds the previous heading (the
/// start heading for step 0) instead of throwing; *events counts occurrences.
WaypointQueue generate_waypoints_resilient(const VehicleState& start, const FieldWorld& w,
                                           const PotentialParams& p,
                                           std::span<const double> speeds, double dt,
                                           double fixed_step, int n, int* events);

}  // namespace mergesim
