#include "mergesim/potential_field.hpp"

#include <algorithm>
#include <cmath>

namespace mergesim {

namespace {

struct TermGrad {
  double u = 0.0;
  double dx = 0.0;
  double dy = 0.0;
};

inline double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

TermGrad attractive_term(double x, const PotentialParams& p) {
  double u = 0.5 * p.lambda * (x - p.x_target) * (x - p.x_target);
  if (u >= p.u_cap) return {p.u_cap, 0.0, 0.0};
  return {u, p.lambda * (x - p.x_target), 0.0};
}

TermGrad lane_divider_term(double x, double y, const RoadGeometry& road,
                           const PotentialParams& p) {
  if (x >= road.x_merge_start) return {};  // no divider in or past the taper
  double d = y - road.y_lane;
  double u = p.a_lane * std::exp(-d * d / (2.0 * p.sigma_lane * p.sigma_lane));
  if (u >= p.u_cap) return {p.u_cap, 0.0, 0.0};
  return {u, 0.0, -u * d / (p.sigma_lane * p.sigma_lane)};
}

// One edge barrier. d = signed clearance from the offset line (positive on the
// road side), ddx/ddy = derivative of d w.r.t. position.
TermGrad edge_barrier(double d, double ddx, double ddy, const PotentialParams& p) {
  if (d <= 0.0) return {p.u_cap, 0.0, 0.0};  // inside the offset band
  double u = 0.5 * p.xi / (d * d);
  if (u >= p.u_cap) return {p.u_cap, 0.0, 0.0};
  double du = -p.xi / (d * d * d);  // dU/dd
  return {u, du * ddx, du * ddy};
}

TermGrad road_edge_term(double x, double y, const RoadGeometry& road, double veh_width,
                        const PotentialParams& p) {
  EdgePair e = road_edge_y(road, x);
  double half_w = 0.5 * veh_width;

  // Lower edge rises through the taper, so its clearance also varies with x.
  double dyl_dx = (x >= road.x_merge_start && x <= road.x_merge_end) ? road.k_sl : 0.0;
  TermGrad lower = edge_barrier(y - (e.y_lower + half_w), -dyl_dx, 1.0, p);
  TermGrad upper = edge_barrier((e.y_upper - half_w) - y, 0.0, -1.0, p);

  TermGrad out{lower.u + upper.u, lower.dx + upper.dx, lower.dy + upper.dy};
  if (out.u >= p.u_cap) return {p.u_cap, 0.0, 0.0};
  return out;
}

TermGrad obstacle_term(double px, double py, const VehicleState& obs,
                       const VehicleState& host, const PotentialParams& p) {
  double dmin = min_braking_distance(host, obs, p.dmin_mass_normalized);
  double sx = dmin * std::sqrt(-1.0 / std::log(p.u_thresh));
  double ky = std::sqrt(2.0 * std::log(p.a_obs / p.epsilon));

  double dx = px - obs.x;
  double dy = py - obs.y;
  double c1 = 1.0 - obs.psi * obs.psi;

  // sigma_y carries |dy| itself, which turns the lateral quadratic into a
  // linear decay; the removable 0/0 at dy = 0 is taken as zero contribution.
  double lateral = std::abs(dy) * ky;
  double cross = 2.0 * obs.psi * dx * sgn(dy) * ky / sx;

  double expo = -0.5 * c1 * (dx * dx / sx + lateral - cross);
  double u = p.a_obs * std::exp(expo);
  if (!std::isfinite(u))
    throw NumericalError("obstacle_potential", "non-finite value near obstacle " + obs.id);
  if (u >= p.u_cap) return {p.u_cap, 0.0, 0.0};

  double dexpo_dx = -0.5 * c1 * (2.0 * dx / sx - 2.0 * obs.psi * sgn(dy) * ky / sx);
  double dexpo_dy = -0.5 * c1 * sgn(dy) * ky;
  return {u, u * dexpo_dx, u * dexpo_dy};
}

TermGrad universal_term(double px, double py, const FieldWorld& w,
                        const PotentialParams& p) {
  TermGrad acc = attractive_term(px, p);
  TermGrad ld = lane_divider_term(px, py, w.road, p);
  TermGrad re = road_edge_term(px, py, w.road, w.host.width, p);
  acc.u += ld.u + re.u;
  acc.dx += ld.dx + re.dx;
  acc.dy += ld.dy + re.dy;
  for (const auto& obs : w.others) {
    TermGrad ob = obstacle_term(px, py, obs, w.host, p);
    acc.u += ob.u;
    acc.dx += ob.dx;
    acc.dy += ob.dy;
  }
  return acc;
}

}  // namespace

double attractive_potential(double x, const PotentialParams& p) {
  return attractive_term(x, p).u;
}

double lane_divider_potential(double x, double y, const RoadGeometry& road,
                              const PotentialParams& p) {
  return lane_divider_term(x, y, road, p).u;
}

double road_edge_potential(double x, double y, const RoadGeometry& road, double veh_width,
                           const PotentialParams& p) {
  return road_edge_term(x, y, road, veh_width, p).u;
}

double min_braking_distance(const VehicleState& host, const VehicleState& obs,
                            bool mass_normalized) {
  double mh = mass_normalized ? 1.0 : host.mass;
  double mo = mass_normalized ? 1.0 : obs.mass;
  double margin = mh * host.v * host.v / (2.0 * host.a_brake_max) -
                  mo * obs.v * obs.v / (2.0 * obs.a_brake_max) +
                  0.5 * (host.wheelbase + obs.wheelbase);
  return std::max(margin, 0.5 * (host.wheelbase + obs.wheelbase));
}

double obstacle_potential(double px, double py, const VehicleState& obs,
                          const VehicleState& host, const PotentialParams& p) {
  return obstacle_term(px, py, obs, host, p).u;
}

double universal_potential(double px, double py, const FieldWorld& w,
                           const PotentialParams& p) {
  return universal_term(px, py, w, p).u;
}

Force2 virtual_force(double px, double py, const FieldWorld& w, const PotentialParams& p) {
  TermGrad g = universal_term(px, py, w, p);
  Force2 f{-g.dx, -g.dy};
  if (!std::isfinite(f.fx) || !std::isfinite(f.fy))
    throw NumericalError("virtual_force", "non-finite gradient of the universal field");
  return f;
}

double reference_heading(const Force2& f) {
  if (std::abs(f.fx) < 1e-12 && std::abs(f.fy) < 1e-12) throw LocalMinimumError(-1);
  return std::atan2(f.fy, f.fx);
}

namespace {

WaypointQueue iterate_waypoints(const VehicleState& start, const FieldWorld& w,
                                const PotentialParams& p, std::span<const double> speeds,
                                double dt, double fixed_step, int n, bool resilient,
                                int* events) {
  WaypointQueue q;
  q.points.reserve(static_cast<std::size_t>(n));
  q.step_lengths.reserve(static_cast<std::size_t>(n));
  double cx = start.x;
  double cy = start.y;
  double heading = start.psi;  // fallback while the force stays degenerate
  for (int i = 0; i < n; ++i) {
    Force2 f = virtual_force(cx, cy, w, p);
    if (std::abs(f.fx) < 1e-12 && std::abs(f.fy) < 1e-12) {
      if (!resilient) throw LocalMinimumError(i);
      if (events) ++(*events);
    } else {
      heading = std::atan2(f.fy, f.fx);
    }
    double step = speeds.empty() ? fixed_step : speeds[static_cast<std::size_t>(i)] * dt;
    cx += step * std::cos(heading);
    cy += step * std::sin(heading);
    q.points.push_back({cx, cy});
    q.step_lengths.push_back(step);
  }
  return q;
}

}  // namespace

WaypointQueue generate_waypoints(const VehicleState& start, const FieldWorld& w,
                                 const PotentialParams& p, double step_len, int n) {
  return iterate_waypoints(start, w, p, {}, 0.0, step_len, n, false, nullptr);
}

WaypointQueue generate_waypoints(const VehicleState& start, const FieldWorld& w,
                                 const PotentialParams& p, std::span<const double> speeds,
                                 double dt) {
  return iterate_waypoints(start, w, p, speeds, dt, 0.0, static_cast<int>(speeds.size()),
                           false, nullptr);
}

WaypointQueue generate_waypoints_resilient(const VehicleState& start, const FieldWorld& w,
                                           const PotentialParams& p,
                                           std::span<const double> speeds, double dt,
                                           double fixed_step, int n, int* events) {
  int count = speeds.empty() ? n : static_cast<int>(speeds.size());
  return iterate_waypoints(start, w, p, speeds, dt, fixed_step, count, true, events);
}

}  // namespace mergesim
