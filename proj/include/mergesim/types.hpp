#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace mergesim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Merging-road layout: two lanes (divided at y_lane) taper into one between
/// x_merge_start and x_merge_end, where the lower edge climbs linearly from
/// y_bottom up to y_lane. The taper line k_sl*x + b is derived from the two
/// continuity conditions, never set directly.
struct RoadGeometry {
  double y_bottom = 0.0;       // lower-lane outer edge [m]
  double y_lane = 3.5;         // lane divider / merged lower edge [m]
  double y_upper = 7.0;        // upper road edge [m]
  double x_merge_start = 160.0;
  double x_merge_end = 280.0;
  double lane_width = 3.5;
  double k_sl = 0.0;           // derived taper slope
  double b = 0.0;              // derived taper intercept

  void derive_taper() {
    k_sl = (y_lane - y_bottom) / (x_merge_end - x_merge_start);
    b = y_bottom - k_sl * x_merge_start;
  }
};

struct EdgePair {
  double y_lower = 0.0;
  double y_upper = 0.0;
};

/// Lateral positions of both road edges at longitudinal position x.
inline EdgePair road_edge_y(const RoadGeometry& road, double x) {
  EdgePair e;
  if (x < road.x_merge_start) {
    e.y_lower = road.y_bottom;
  } else if (x <= road.x_merge_end) {
    e.y_lower = road.k_sl * x + road.b;
  } else {
    e.y_lower = road.y_lane;
  }
  e.y_upper = road.y_upper;
  return e;
}

struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double psi = 0.0;        // heading [rad]
  double beta = 0.0;       // sideslip [rad]
  double v = 0.0;          // longitudinal speed [m/s]
  double yaw_rate = 0.0;   // [rad/s]
  double mass = 1500.0;    // [kg]
  double wheelbase = 2.7;  // [m]
  double width = 1.8;      // [m]
  double a_brake_max = 8.0;  // braking deceleration magnitude [m/s^2]
  std::string id;
};

/// Gains and shape constants for every potential term.
struct PotentialParams {
  double lambda = 0.1;        // attractive slope scale
  double x_target = 2000.0;   // attractive target [m]
  double a_lane = 40.0;       // lane-divider amplitude
  double sigma_lane = 1.2;    // lane-divider slope [m]
  double xi = 8.0;            // road-edge scale
  double a_obs = 100.0;       // obstacle amplitude
  double epsilon = 3e-3;      // minimum positive factor (floor of the obstacle field)
  double u_thresh = 0.5;      // normalized level reached at distance D_min, in (0,1)
  double u_cap = 1e6;         // clamp for every potential term
  bool dmin_mass_normalized = true;  // divide the kinetic terms of D_min by mass
};

enum class PlannerKind { PF_CS, PF_SP, PF_ISO };

inline const char* to_string(PlannerKind k) {
  switch (k) {
    case PlannerKind::PF_CS: return "PF_CS";
    case PlannerKind::PF_SP: return "PF_SP";
    case PlannerKind::PF_ISO: return "PF_ISO";
  }
  return "?";
}

// --- error taxonomy ---

/// A named config field violated an invariant.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Input file failed to parse as the documented schema.
class SchemaError : public std::runtime_error {
 public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

/// The virtual force vanished: potential-field local minimum.
class LocalMinimumError : public std::runtime_error {
 public:
  explicit LocalMinimumError(int index)
      : std::runtime_error("potential-field local minimum at waypoint index " +
                           std::to_string(index)),
        index_(index) {}
  int index() const { return index_; }

 private:
  int index_;
};

/// A field evaluation produced a non-finite value.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string term, const std::string& what)
      : std::runtime_error(term + ": " + what), term_(std::move(term)) {}
  const std::string& term() const { return term_; }

 private:
  std::string term_;
};

class BusIntegrityError : public std::runtime_error {
 public:
  explicit BusIntegrityError(const std::string& what) : std::runtime_error(what) {}
};

class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

inline bool finite(double v) { return std::isfinite(v); }

}  // namespace mergesim
