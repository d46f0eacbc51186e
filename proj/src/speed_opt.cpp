#include "mergesim/speed_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mergesim {

namespace {

VehicleState sender_as_obstacle(Vec2 at, const SlpMeta& meta) {
  VehicleState s;
  s.x = at.x;
  s.y = at.y;
  s.psi = meta.heading;
  s.v = meta.speed;
  s.mass = meta.mass;
  s.wheelbase = meta.wheelbase;
  s.a_brake_max = meta.a_brake_max;
  s.id = "slp";
  return s;
}

// Total shared-path field at the ego's i-th predicted waypoint (0-based step
// i+1). Sender waypoint index is clamped to its last entry when the shared
// path is shorter than the horizon.
double slp_field_at(int i, Vec2 ego_wp, const IsoProblem& prob) {
  double total = 0.0;
  for (const auto& sp : prob.shared) {
    std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(i) + 1,
                                            sp.waypoints.size() - 1);
    total += slp_potential(ego_wp, sp.waypoints[idx], sp.meta, prob.world.host, prob.pf);
  }
  return total;
}

struct ObjectiveTerms {
  double travel = 0.0;     // sum of segment times
  double deviation = 0.0;  // sum of squared target deviations
  double awareness = 0.0;  // sum of ln U_slp
};

double combine(const ObjectiveTerms& t, const IsoWeights& w) {
  return w.w1 * t.travel + w.w2 * t.deviation + w.w3 * t.awareness;
}

}  // namespace

double max_speed_cap(const CubicPath& path, double v_limit, double mu, double g) {
  double kappa = std::abs(path_curvature(path, 0.0, CurvatureMode::quadratic_approx));
  if (kappa < 1e-12) return v_limit;
  return std::min(v_limit, std::sqrt(mu * g / kappa));
}

double slp_potential(Vec2 ego_wp, Vec2 slp_wp, const SlpMeta& sender,
                     const VehicleState& ego, const PotentialParams& p) {
  VehicleState obs = sender_as_obstacle(slp_wp, sender);
  return std::max(obstacle_potential(ego_wp.x, ego_wp.y, obs, ego, p), p.epsilon);
}

double iso_objective(std::span<const double> speeds, const IsoProblem& prob) {
  const int n = static_cast<int>(speeds.size());
  WaypointQueue q = generate_waypoints_resilient(prob.world.host, prob.world, prob.pf,
                                                 speeds, prob.dt, 0.0, n, nullptr);
  ObjectiveTerms t;
  for (int i = 0; i + 1 < n; ++i)
    t.travel += (q.points[i + 1].x - q.points[i].x) / std::max(speeds[i], prob.v_floor);
  for (int i = 0; i < n; ++i) {
    double d = speeds[i] - prob.v_target;
    t.deviation += 0.5 * d * d;
  }
  if (prob.weights.w3 != 0.0 && !prob.shared.empty())
    for (int i = 0; i < n; ++i)
      t.awareness += std::log(std::max(slp_field_at(i, q.points[i], prob), prob.pf.epsilon));
  return combine(t, prob.weights);
}

namespace {

// 1-D minimization of the full objective in coordinate i: coarse scan over
// [0, cap] to bracket, golden-section refinement inside the winning cell.
void improve_coordinate(std::vector<double>& v, int i, const IsoProblem& prob,
                        double& best_obj) {
  const double cap = prob.caps[static_cast<std::size_t>(i)];
  const int scan = 25;
  auto eval_at = [&](double cand) {
    double saved = v[static_cast<std::size_t>(i)];
    v[static_cast<std::size_t>(i)] = cand;
    double obj = iso_objective(v, prob);
    v[static_cast<std::size_t>(i)] = saved;
    return obj;
  };

  double best_v = v[static_cast<std::size_t>(i)];
  int best_k = -1;
  for (int k = 0; k < scan; ++k) {
    double cand = cap * static_cast<double>(k) / (scan - 1);
    double obj = eval_at(cand);
    if (obj < best_obj) {
      best_obj = obj;
      best_v = cand;
      best_k = k;
    }
  }

  // Refine around the best scan cell (or around the incumbent if the scan
  // found nothing better).
  double lo = 0.0, hi = cap;
  double center = best_k >= 0 ? best_v : v[static_cast<std::size_t>(i)];
  double cell = cap / (scan - 1);
  lo = std::max(0.0, center - cell);
  hi = std::min(cap, center + cell);

  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double f1 = eval_at(x1);
  double f2 = eval_at(x2);
  while (b - a > prob.opt_tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = eval_at(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = eval_at(x2);
    }
  }
  double mid = std::clamp(0.5 * (a + b), 0.0, cap);
  double fmid = eval_at(mid);
  if (fmid < best_obj) {
    best_obj = fmid;
    best_v = mid;
  }
  v[static_cast<std::size_t>(i)] = best_v;
}

}  // namespace

SpeedProfile optimize_speeds(const IsoProblem& prob) {
  const int n = prob.n;
  if (static_cast<int>(prob.caps.size()) != n)
    throw ValidationError("iso.caps", "caps length must equal the horizon");

  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    v[static_cast<std::size_t>(i)] =
        std::clamp(prob.v_target, 0.0, prob.caps[static_cast<std::size_t>(i)]);

  double best_obj = iso_objective(v, prob);

  // Forward sweep mirrors causality: earlier speeds place later waypoints.
  for (int i = 0; i < n; ++i) improve_coordinate(v, i, prob, best_obj);
  // One refinement pass over the full profile.
  for (int i = 0; i < n; ++i) improve_coordinate(v, i, prob, best_obj);

  SpeedProfile out;
  out.caps = prob.caps;
  out.v = std::move(v);
  for (int i = 0; i < n; ++i)
    out.v[static_cast<std::size_t>(i)] =
        std::clamp(out.v[static_cast<std::size_t>(i)], 0.0,
                   prob.caps[static_cast<std::size_t>(i)]);
  out.objective = best_obj;
  return out;
}

namespace {

struct OracleBest {
  double obj = std::numeric_limits<double>::infinity();
  std::vector<int> idx;
};

struct SlpEval {
  // Position-independent pieces of the sender field, hoisted out of the leaf loop.
  double sx = 0.0;
  double ky = 0.0;
  double c1 = 0.0;
  double psi = 0.0;
  std::vector<Vec2> wp_per_step;  // sender waypoint paired with ego step i
};

double slp_sum_fast(const std::vector<SlpEval>& senders, int i, double px, double py,
                    const PotentialParams& p) {
  double total = 0.0;
  for (const auto& s : senders) {
    const Vec2& o = s.wp_per_step[static_cast<std::size_t>(i)];
    double dx = px - o.x;
    double dy = py - o.y;
    double sg = dy > 0 ? 1.0 : (dy < 0 ? -1.0 : 0.0);
    double expo =
        -0.5 * s.c1 * (dx * dx / s.sx + std::abs(dy) * s.ky - 2.0 * s.psi * dx * sg * s.ky / s.sx);
    total += std::max(p.a_obs > 0 ? std::min(p.a_obs * std::exp(expo), p.u_cap) : 0.0,
                      p.epsilon);
  }
  return total;
}

// Depth-first enumeration with prefix reuse: the virtual force (and therefore
// the step heading) at a node depends only on speeds above it, so each
// interior node evaluates the field once for all of its children.
void oracle_recurse(const IsoProblem& prob, const std::vector<std::vector<double>>& grid,
                    const std::vector<SlpEval>& senders, int depth, double cx, double cy,
                    double heading_prev, double prev_x, double prev_v, double obj_prefix,
                    std::vector<int>& idx, OracleBest& best) {
  const int n = prob.n;
  double heading = heading_prev;
  Force2 f = virtual_force(cx, cy, prob.world, prob.pf);
  if (!(std::abs(f.fx) < 1e-12 && std::abs(f.fy) < 1e-12)) heading = std::atan2(f.fy, f.fx);
  double cosh_ = std::cos(heading);
  double sinh_ = std::sin(heading);

  const auto& axis = grid[static_cast<std::size_t>(depth)];
  for (std::size_t k = 0; k < axis.size(); ++k) {
    double v = axis[k];
    double nx = cx + v * prob.dt * cosh_;
    double ny = cy + v * prob.dt * sinh_;
    double obj = obj_prefix;
    if (depth >= 1) obj += prob.weights.w1 * (nx - prev_x) / std::max(prev_v, prob.v_floor);
    double dtar = v - prob.v_target;
    obj += prob.weights.w2 * 0.5 * dtar * dtar;
    if (prob.weights.w3 != 0.0 && !senders.empty())
      obj += prob.weights.w3 *
             std::log(std::max(slp_sum_fast(senders, depth, nx, ny, prob.pf), prob.pf.epsilon));

    idx[static_cast<std::size_t>(depth)] = static_cast<int>(k);
    if (depth + 1 == n) {
      if (obj < best.obj) {
        best.obj = obj;
        best.idx = idx;
      }
    } else {
      oracle_recurse(prob, grid, senders, depth + 1, nx, ny, heading, nx, v, obj, idx, best);
    }
  }
}

std::vector<SlpEval> precompute_senders(const IsoProblem& prob) {
  std::vector<SlpEval> out;
  for (const auto& sp : prob.shared) {
    SlpEval e;
    VehicleState synth = sender_as_obstacle(sp.waypoints.front(), sp.meta);
    double dmin = min_braking_distance(prob.world.host, synth, prob.pf.dmin_mass_normalized);
    e.sx = dmin * std::sqrt(-1.0 / std::log(prob.pf.u_thresh));
    e.ky = std::sqrt(2.0 * std::log(prob.pf.a_obs / prob.pf.epsilon));
    e.c1 = 1.0 - sp.meta.heading * sp.meta.heading;
    e.psi = sp.meta.heading;
    e.wp_per_step.resize(static_cast<std::size_t>(prob.n));
    for (int i = 0; i < prob.n; ++i) {
      std::size_t idx = std::min<std::size_t>(static_cast<std::size_t>(i) + 1,
                                              sp.waypoints.size() - 1);
      e.wp_per_step[static_cast<std::size_t>(i)] = sp.waypoints[idx];
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace

SpeedProfile brute_force_speed_oracle(const IsoProblem& prob, int grid_points,
                                      bool parallel) {
  if (prob.n > 5)
    throw ValidationError("oracle.n", "exhaustive oracle limited to n <= 5 (got " +
                                          std::to_string(prob.n) + ")");
  if (grid_points < 2) throw ValidationError("oracle.grid_points", "need >= 2 points");
  if (static_cast<int>(prob.caps.size()) != prob.n)
    throw ValidationError("iso.caps", "caps length must equal the horizon");

  std::vector<std::vector<double>> grid(static_cast<std::size_t>(prob.n));
  for (int i = 0; i < prob.n; ++i) {
    grid[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(grid_points));
    for (int k = 0; k < grid_points; ++k)
      grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] =
          prob.caps[static_cast<std::size_t>(i)] * static_cast<double>(k) /
          (grid_points - 1);
  }
  std::vector<SlpEval> senders =
      prob.weights.w3 != 0.0 ? precompute_senders(prob) : std::vector<SlpEval>{};

  const VehicleState& start = prob.world.host;
  Force2 f0 = virtual_force(start.x, start.y, prob.world, prob.pf);
  double heading0 = start.psi;
  if (!(std::abs(f0.fx) < 1e-12 && std::abs(f0.fy) < 1e-12))
    heading0 = std::atan2(f0.fy, f0.fx);
  double c0 = std::cos(heading0), s0 = std::sin(heading0);

  // One branch per first-axis grid point; the merge below is in axis order, so
  // serial and parallel runs pick the same argmin even under exact ties.
  std::vector<OracleBest> branch(static_cast<std::size_t>(grid_points));

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int k0 = 0; k0 < grid_points; ++k0) {
    double v = grid[0][static_cast<std::size_t>(k0)];
    double nx = start.x + v * prob.dt * c0;
    double ny = start.y + v * prob.dt * s0;
    double obj = 0.0;
    double dtar = v - prob.v_target;
    obj += prob.weights.w2 * 0.5 * dtar * dtar;
    if (prob.weights.w3 != 0.0 && !senders.empty())
      obj += prob.weights.w3 *
             std::log(std::max(slp_sum_fast(senders, 0, nx, ny, prob.pf), prob.pf.epsilon));

    OracleBest local;
    std::vector<int> idx(static_cast<std::size_t>(prob.n));
    idx[0] = k0;
    if (prob.n == 1) {
      local.obj = obj;
      local.idx = idx;
    } else {
      oracle_recurse(prob, grid, senders, 1, nx, ny, heading0, nx, v, obj, idx, local);
    }
    branch[static_cast<std::size_t>(k0)] = std::move(local);
  }

  OracleBest best;
  for (const auto& b : branch)
    if (b.obj < best.obj) best = b;

  SpeedProfile out;
  out.caps = prob.caps;
  out.v.resize(static_cast<std::size_t>(prob.n));
  for (int i = 0; i < prob.n; ++i)
    out.v[static_cast<std::size_t>(i)] =
        grid[static_cast<std::size_t>(i)][static_cast<std::size_t>(best.idx[static_cast<std::size_t>(i)])];
  out.objective = best.obj;
  return out;
}

}  // namespace mergesim
