#pragma once

#include <string>
#include <vector>

#include "mergesim/potential_field.hpp"
#include "mergesim/types.hpp"

namespace mergesim {

struct GridSpec {
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;
  double resolution = 1.0;  // cell size [m]
};

struct FieldGrid {
  GridSpec spec;
  int nx = 0, ny = 0;
  std::vector<double> u;  // row-major, index = iy*nx + ix

  double at(int ix, int iy) const { return u[static_cast<std::size_t>(iy) * nx + ix]; }
  double x_at(int ix) const { return spec.x0 + ix * spec.resolution; }
  double y_at(int iy) const { return spec.y0 + iy * spec.resolution; }
};

/// Serial reference: universal potential sampled on the grid.
FieldGrid eval_field_grid_serial(const FieldWorld& w, const PotentialParams& p,
                                 const GridSpec& spec);

/// OpenMP kernel over grid rows; bit-identical to the serial reference.
FieldGrid eval_field_grid(const FieldWorld& w, const PotentialParams& p,
                          const GridSpec& spec);

/// CSV with header x_m,y_m,u, one row per grid node.
void write_grid_csv(const std::string& path, const FieldGrid& grid);

}  // namespace mergesim
