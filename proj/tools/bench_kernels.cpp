// Timing comparison of the OpenMP kernels against their serial references:
// potential-field grid sampling and the exhaustive speed-grid oracle. Both
// pairs must agree bit-for-bit; the serial versions are the ground truth the
// tests check against.

#include <chrono>
#include <cmath>
#include <cstdio>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mergesim/field_grid.hpp"
#include "mergesim/scenario.hpp"
#include "mergesim/speed_opt.hpp"

using namespace mergesim;

namespace {

double seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

FieldWorld default_world() {
  ScenarioConfig cfg = default_scenario();
  FieldWorld w;
  w.road = cfg.road;
  w.host = cfg.vehicles[0].state;
  w.others = {cfg.vehicles[1].state};
  return w;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; parallel kernels run serially\n");
#endif

  ScenarioConfig cfg = default_scenario();
  FieldWorld world = default_world();

  // Field grid: 0.25 m cells over the whole road corridor.
  GridSpec spec;
  spec.x0 = 0.0;
  spec.x1 = cfg.road.x_merge_end + cfg.sim.finish_margin;
  spec.y0 = cfg.road.y_bottom - 1.0;
  spec.y1 = cfg.road.y_upper + 1.0;
  spec.resolution = 0.25;

  auto t0 = std::chrono::steady_clock::now();
  FieldGrid serial = eval_field_grid_serial(world, cfg.pf, spec);
  double t_serial = seconds(t0);

  t0 = std::chrono::steady_clock::now();
  FieldGrid parallel = eval_field_grid(world, cfg.pf, spec);
  double t_parallel = seconds(t0);

  bool grid_equal = serial.u == parallel.u;
  std::printf("field grid  %dx%d nodes: serial %.3fs, parallel %.3fs, speedup %.2fx, %s\n",
              serial.nx, serial.ny, t_serial, t_parallel, t_serial / t_parallel,
              grid_equal ? "bit-identical" : "MISMATCH");

  // Speed oracle: n=4, 50-point grid = 6.25M profiles.
  IsoProblem prob;
  prob.world = world;
  prob.pf = cfg.pf;
  prob.weights = {cfg.iso.w1, cfg.iso.w2, cfg.iso.w3};
  prob.dt = cfg.sim.dt;
  prob.n = 4;
  prob.caps.assign(4, cfg.vehicles[0].v_limit);
  prob.v_target = cfg.vehicles[0].v_target;
  prob.v_floor = cfg.iso.v_floor;
  SharedPath sp;
  sp.meta = SlpMeta{1500.0, 2.7, 8.0, 0.0, 15.0};
  for (int i = 0; i <= prob.n; ++i)
    sp.waypoints.push_back({world.host.x + 12.0 + 1.5 * i, world.host.y + 0.5});
  prob.shared = {sp};

  t0 = std::chrono::steady_clock::now();
  SpeedProfile s_serial = brute_force_speed_oracle(prob, 50, false);
  double o_serial = seconds(t0);

  t0 = std::chrono::steady_clock::now();
  SpeedProfile s_parallel = brute_force_speed_oracle(prob, 50, true);
  double o_parallel = seconds(t0);

  bool oracle_equal =
      s_serial.v == s_parallel.v && s_serial.objective == s_parallel.objective;
  std::printf("speed oracle 50^4 profiles: serial %.3fs, parallel %.3fs, speedup %.2fx, %s\n",
              o_serial, o_parallel, o_serial / o_parallel,
              oracle_equal ? "bit-identical" : "MISMATCH");

  return (grid_equal && oracle_equal) ? 0 : 1;
}
