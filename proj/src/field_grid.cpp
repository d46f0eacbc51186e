#include "mergesim/field_grid.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace mergesim {

namespace {

FieldGrid make_grid(const GridSpec& spec) {
  if (spec.resolution <= 0.0)
    throw ValidationError("grid.resolution", "must be > 0");
  FieldGrid g;
  g.spec = spec;
  g.nx = static_cast<int>(std::floor((spec.x1 - spec.x0) / spec.resolution)) + 1;
  g.ny = static_cast<int>(std::floor((spec.y1 - spec.y0) / spec.resolution)) + 1;
  g.u.resize(static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny));
  return g;
}

}  // namespace

FieldGrid eval_field_grid_serial(const FieldWorld& w, const PotentialParams& p,
                                 const GridSpec& spec) {
  FieldGrid g = make_grid(spec);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix)
      g.u[static_cast<std::size_t>(iy) * g.nx + ix] =
          universal_potential(g.x_at(ix), g.y_at(iy), w, p);
  return g;
}

FieldGrid eval_field_grid(const FieldWorld& w, const PotentialParams& p,
                          const GridSpec& spec) {
  FieldGrid g = make_grid(spec);
#pragma omp parallel for schedule(static)
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix)
      g.u[static_cast<std::size_t>(iy) * g.nx + ix] =
          universal_potential(g.x_at(ix), g.y_at(iy), w, p);
  return g;
}

void write_grid_csv(const std::string& path, const FieldGrid& grid) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write grid file '" + path + "'");
  out << "x_m,y_m,u\n";
  char buf[128];
  for (int iy = 0; iy < grid.ny; ++iy)
    for (int ix = 0; ix < grid.nx; ++ix) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", grid.x_at(ix), grid.y_at(iy),
                    grid.at(ix, iy));
      out << buf;
    }
}

}  // namespace mergesim
