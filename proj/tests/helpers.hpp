#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "mergesim/potential_field.hpp"
#include "mergesim/scenario.hpp"

namespace mergesim::test {

// Road so wide that both edge barriers and the lane divider are negligible at
// y ~ 0: the field reduces to the attractive term, pointing straight at the
// target.
inline RoadGeometry wide_flat_road() {
  RoadGeometry r;
  r.y_bottom = -2e6;
  r.y_lane = -1e6;
  r.y_upper = 2e6;
  r.x_merge_start = 1e7;
  r.x_merge_end = 1e7 + 100.0;
  r.lane_width = 3.5;
  r.derive_taper();
  return r;
}

inline VehicleState vehicle_at(double x, double y, double v, const std::string& id = "v") {
  VehicleState s;
  s.x = x;
  s.y = y;
  s.v = v;
  s.id = id;
  return s;
}

inline FieldWorld flat_world(double x = 0.0, double y = 0.0, double v = 20.0) {
  FieldWorld w;
  w.road = wide_flat_road();
  w.host = vehicle_at(x, y, v, "host");
  return w;
}

inline FieldWorld default_world(int host_index = 0) {
  ScenarioConfig cfg = default_scenario();
  FieldWorld w;
  w.road = cfg.road;
  w.host = cfg.vehicles[static_cast<std::size_t>(host_index)].state;
  for (std::size_t j = 0; j < cfg.vehicles.size(); ++j)
    if (j != static_cast<std::size_t>(host_index)) w.others.push_back(cfg.vehicles[j].state);
  return w;
}

// Independent weighted least-squares route for the fit oracle: builds the
// normal equations and solves them with its own elimination.
inline std::array<double, 4> wls_closed_form(const std::vector<double>& xs,
                                             const std::vector<double>& ys,
                                             const std::vector<double>& ws,
                                             double x_offset) {
  double h[4][4] = {};
  double g[4] = {};
  for (std::size_t k = 0; k < xs.size(); ++k) {
    double u = xs[k] - x_offset;
    double row[4] = {1.0, u, u * u, u * u * u};
    for (int i = 0; i < 4; ++i) {
      g[i] += ws[k] * row[i] * ys[k];
      for (int j = 0; j < 4; ++j) h[i][j] += ws[k] * row[i] * row[j];
    }
  }
  // Gauss-Jordan with partial pivoting.
  int idx[4] = {0, 1, 2, 3};
  for (int c = 0; c < 4; ++c) {
    int p = c;
    for (int r = c + 1; r < 4; ++r)
      if (std::abs(h[r][c]) > std::abs(h[p][c])) p = r;
    for (int j = 0; j < 4; ++j) std::swap(h[c][j], h[p][j]);
    std::swap(g[c], g[p]);
    std::swap(idx[c], idx[p]);
    for (int r = 0; r < 4; ++r) {
      if (r == c) continue;
      double f = h[r][c] / h[c][c];
      for (int j = 0; j < 4; ++j) h[r][j] -= f * h[c][j];
      g[r] -= f * g[c];
    }
  }
  return {g[0] / h[0][0], g[1] / h[1][1], g[2] / h[2][2], g[3] / h[3][3]};
}

}  // namespace mergesim::test
