#include "mergesim/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>

namespace mergesim {

namespace {

struct Deriv {
  double x, y, psi, beta, r, v;
};

// Linear single-track lateral dynamics plus point-mass longitudinal.
Deriv dynamics(const VehicleState& s, double beta, double r, double psi, double v,
               double steer, double accel, const DynParams& d) {
  double lf = 0.5 * s.wheelbase;
  double lr = 0.5 * s.wheelbase;
  double v_eff = std::max(v, 1.0);  // lateral model is singular at rest

  double alpha_f = steer - beta - lf * r / v_eff;
  double alpha_r = -beta + lr * r / v_eff;
  double fyf = d.cf * alpha_f;
  double fyr = d.cr * alpha_r;

  Deriv out;
  out.beta = (fyf + fyr) / (s.mass * v_eff) - r;
  out.r = (lf * fyf - lr * fyr) / d.yaw_inertia;
  out.psi = r;
  out.x = v * std::cos(psi + beta);
  out.y = v * std::sin(psi + beta);
  out.v = accel;
  return out;
}

}  // namespace

VehicleState vehicle_step(const VehicleState& s, double steer, double accel, double dt,
                          const DynParams& d) {
  if (dt <= 0.0) throw ValidationError("sim.dt_s", "must be > 0");
  steer = std::clamp(steer, -d.steer_max, d.steer_max);
  accel = std::clamp(accel, -s.a_brake_max, d.a_accel_max);

  auto eval = [&](double beta, double r, double psi, double v) {
    return dynamics(s, beta, r, psi, v, steer, accel, d);
  };

  Deriv k1 = eval(s.beta, s.yaw_rate, s.psi, s.v);
  Deriv k2 = eval(s.beta + 0.5 * dt * k1.beta, s.yaw_rate + 0.5 * dt * k1.r,
                  s.psi + 0.5 * dt * k1.psi, std::max(0.0, s.v + 0.5 * dt * k1.v));
  Deriv k3 = eval(s.beta + 0.5 * dt * k2.beta, s.yaw_rate + 0.5 * dt * k2.r,
                  s.psi + 0.5 * dt * k2.psi, std::max(0.0, s.v + 0.5 * dt * k2.v));
  Deriv k4 = eval(s.beta + dt * k3.beta, s.yaw_rate + dt * k3.r, s.psi + dt * k3.psi,
                  std::max(0.0, s.v + dt * k3.v));

  auto rk4 = [&](double y0, double d1, double d2, double d3, double d4) {
    return y0 + dt / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4);
  };

  VehicleState out = s;
  out.x = rk4(s.x, k1.x, k2.x, k3.x, k4.x);
  out.y = rk4(s.y, k1.y, k2.y, k3.y, k4.y);
  out.psi = rk4(s.psi, k1.psi, k2.psi, k3.psi, k4.psi);
  out.beta = rk4(s.beta, k1.beta, k2.beta, k3.beta, k4.beta);
  out.yaw_rate = rk4(s.yaw_rate, k1.r, k2.r, k3.r, k4.r);
  out.v = std::max(0.0, rk4(s.v, k1.v, k2.v, k3.v, k4.v));  // no reverse

  if (!finite(out.x) || !finite(out.y) || !finite(out.psi) || !finite(out.beta) ||
      !finite(out.yaw_rate) || !finite(out.v))
    throw DivergenceError("vehicle dynamics diverged for '" + s.id + "'");
  return out;
}

void bicycle_steady_state(const VehicleState& s, double steer, const DynParams& d,
                          double* beta_ss, double* yaw_rate_ss) {
  // Solve the 2x2 system beta_dot = 0, r_dot = 0 for constant steer and speed.
  double lf = 0.5 * s.wheelbase;
  double lr = 0.5 * s.wheelbase;
  double v = std::max(s.v, 1.0);
  double a11 = -(d.cf + d.cr) / (s.mass * v);
  double a12 = (d.cr * lr - d.cf * lf) / (s.mass * v * v) - 1.0;
  double a21 = (d.cr * lr - d.cf * lf) / d.yaw_inertia;
  double a22 = -(d.cf * lf * lf + d.cr * lr * lr) / (d.yaw_inertia * v);
  double b1 = d.cf / (s.mass * v) * steer;
  double b2 = d.cf * lf / d.yaw_inertia * steer;
  double det = a11 * a22 - a12 * a21;
  *beta_ss = (-b1 * a22 + b2 * a12) / det;
  *yaw_rate_ss = (-a11 * b2 + a21 * b1) / det;
}

double pure_pursuit_steer(const VehicleState& s, const CubicPath& path, double lookahead,
                          double steer_max) {
  if (lookahead <= 0.0) throw ValidationError("sim.lookahead_m", "must be > 0");
  // Walk the cubic forward by arc length to find the target point.
  const double du = 0.05;
  double u = s.x;
  double arc = 0.0;
  double prev_y = eval_path(path, u);
  while (arc < lookahead) {
    double next_u = u + du;
    double next_y = eval_path(path, next_u);
    arc += std::hypot(du, next_y - prev_y);
    u = next_u;
    prev_y = next_y;
  }
  double tx = u;
  double ty = prev_y;

  double alpha = std::atan2(ty - s.y, tx - s.x) - s.psi;
  while (alpha > M_PI) alpha -= 2.0 * M_PI;
  while (alpha < -M_PI) alpha += 2.0 * M_PI;
  double steer = std::atan2(2.0 * s.wheelbase * std::sin(alpha), lookahead);
  return std::clamp(steer, -steer_max, steer_max);
}

double speed_track(const VehicleState& s, double v_ref, double kp, double a_brake_max,
                   double a_accel_max) {
  if (kp <= 0.0) throw ValidationError("sim.kp_speed", "must be > 0");
  return std::clamp(kp * (v_ref - s.v), -a_brake_max, a_accel_max);
}

std::vector<double> highpass(const std::vector<double>& x, double fc_hz, double fs_hz) {
  double k = std::tan(M_PI * fc_hz / fs_hz);
  double norm = 1.0 / (1.0 + std::sqrt(2.0) * k + k * k);
  double b0 = norm, b1 = -2.0 * norm, b2 = norm;
  double a1 = 2.0 * (k * k - 1.0) * norm;
  double a2 = (1.0 - std::sqrt(2.0) * k + k * k) * norm;

  std::vector<double> y(x.size(), 0.0);
  // Prime the delay line with the first sample: a constant input then maps to
  // an exactly zero output, so the initial offset produces no warm-up step.
  double x1 = x.empty() ? 0.0 : x[0];
  double x2 = x1;
  double y1 = 0.0, y2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = b0 * x[i] + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
    x2 = x1;
    x1 = x[i];
    y2 = y1;
    y1 = y[i];
  }
  return y;
}

RunMetrics compute_metrics(const VehicleTrace& trace, double dt) {
  RunMetrics m;
  if (trace.rows.empty()) return m;
  m.min_speed = std::numeric_limits<double>::infinity();
  for (const auto& r : trace.rows) {
    m.max_abs_beta = std::max(m.max_abs_beta, std::abs(r.beta));
    m.max_abs_yaw_rate = std::max(m.max_abs_yaw_rate, std::abs(r.yaw_rate));
    m.max_abs_psi = std::max(m.max_abs_psi, std::abs(r.psi));
    m.min_speed = std::min(m.min_speed, r.v);
  }
  for (std::size_t i = 1; i < trace.rows.size(); ++i)
    m.path_length += std::hypot(trace.rows[i].x - trace.rows[i - 1].x,
                                trace.rows[i].y - trace.rows[i - 1].y);

  // Oscillation: wiggle of the driven line around a single cubic fitted to the
  // whole trajectory, with the remaining slow trend removed by a 0.5 Hz
  // high-pass.
  if (trace.rows.size() >= 8 &&
      trace.rows.back().x - trace.rows.front().x > 1.0) {
    FitProblem fp;
    for (const auto& r : trace.rows) {
      fp.x.push_back(r.x);
      fp.y.push_back(r.y);
      fp.weights.push_back(1.0);
    }
    CubicPath ref = fit_cubic(fp);
    std::vector<double> dev(trace.rows.size());
    for (std::size_t i = 0; i < trace.rows.size(); ++i)
      dev[i] = trace.rows[i].y - eval_path(ref, trace.rows[i].x);
    std::vector<double> hp = highpass(dev, 0.5, 1.0 / dt);
    double acc = 0.0;
    for (double d : hp) acc += d * d;
    m.lat_osc_rms = std::sqrt(acc / static_cast<double>(hp.size()));
  }
  return m;
}

namespace {

std::string fmt_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trace_csv(const std::string& path, const VehicleTrace& trace) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write trace file '" + path + "'");
  out << "t,x,y,psi,beta,yaw_rate,v,steer,accel\n";
  for (const auto& r : trace.rows)
    out << fmt_g17(r.t) << ',' << fmt_g17(r.x) << ',' << fmt_g17(r.y) << ','
        << fmt_g17(r.psi) << ',' << fmt_g17(r.beta) << ',' << fmt_g17(r.yaw_rate) << ','
        << fmt_g17(r.v) << ',' << fmt_g17(r.steer) << ',' << fmt_g17(r.accel) << '\n';
}

VehicleTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open trace file '" + path + "'");
  VehicleTrace trace;
  std::string line;
  if (!std::getline(in, line) || line != "t,x,y,psi,beta,yaw_rate,v,steer,accel")
    throw SchemaError("trace file '" + path + "' has an unexpected header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    TraceRow r;
    std::istringstream ss(line);
    std::string cell;
    double* fields[9] = {&r.t,    &r.x,        &r.y, &r.psi,   &r.beta,
                         &r.yaw_rate, &r.v, &r.steer, &r.accel};
    for (int i = 0; i < 9; ++i) {
      if (!std::getline(ss, cell, ','))
        throw SchemaError("trace file '" + path + "': short row");
      *fields[i] = std::stod(cell);
    }
    trace.rows.push_back(r);
  }
  return trace;
}

RunResult run_scenario(const ScenarioConfig& cfg) {
  RunResult result;
  const std::size_t nveh = cfg.vehicles.size();
  result.traces.resize(nveh);
  result.min_separation = std::numeric_limits<double>::infinity();

  std::vector<VehicleState> states;
  std::vector<std::string> ids;
  std::vector<PlanContext> ctxs;
  std::vector<DynParams> dyns;
  for (const auto& spec : cfg.vehicles) {
    states.push_back(spec.state);
    ids.push_back(spec.state.id);
    PlanContext ctx;
    ctx.pf = cfg.pf;
    ctx.weights = {cfg.iso.w1, cfg.iso.w2, cfg.iso.w3};
    ctx.dt = cfg.sim.dt;
    ctx.n = cfg.sim.horizon_n;
    ctx.mu = cfg.sim.mu;
    ctx.g = cfg.sim.gravity;
    ctx.v_target = spec.v_target;
    ctx.v_limit = spec.v_limit;
    ctx.v_floor = cfg.iso.v_floor;
    ctx.opt_tol = cfg.iso.opt_tol;
    ctx.kappa_max = cfg.iso.kappa_max;
    ctx.fit_weight_decay = cfg.iso.fit_weight_decay;
    ctxs.push_back(ctx);
    DynParams d;
    d.cf = cfg.sim.cf;
    d.cr = cfg.sim.cr;
    d.yaw_inertia = cfg.sim.yaw_inertia;
    d.a_accel_max = cfg.sim.a_accel_max;
    d.steer_max = cfg.sim.steer_max;
    dyns.push_back(d);
  }
  for (std::size_t i = 0; i < nveh; ++i) result.traces[i].id = ids[i];

  const double finish_x = cfg.road.x_merge_end + cfg.sim.finish_margin;
  const int max_ticks = static_cast<int>(std::ceil(cfg.sim.duration / cfg.sim.dt));
  Rng bus_rng(cfg.sim.seed);
  std::vector<SlpMessage> pending;

  auto update_separation = [&]() {
    for (std::size_t i = 0; i < nveh; ++i)
      for (std::size_t j = i + 1; j < nveh; ++j)
        result.min_separation =
            std::min(result.min_separation,
                     std::hypot(states[i].x - states[j].x, states[i].y - states[j].y));
  };

  for (int tick = 0; tick < max_ticks; ++tick) {
    auto inboxes = bus_exchange(pending, ids, cfg.sim.drop_probability, bus_rng);
    for (std::size_t i = 0; i < nveh; ++i)
      if (!cfg.vehicles[i].v2v_rx) inboxes[i].clear();

    std::vector<std::vector<std::string>> inbox_senders(nveh);
    for (std::size_t i = 0; i < nveh; ++i)
      for (const auto& m : inboxes[i]) inbox_senders[i].push_back(m.sender);
    result.inbox_log.push_back(std::move(inbox_senders));

    std::vector<PlanResult> plans(nveh);
    std::vector<std::exception_ptr> errors(nveh);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < static_cast<int>(nveh); ++i) {
      try {
        FieldWorld world;
        world.road = cfg.road;
        world.host = states[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < nveh; ++j)
          if (j != static_cast<std::size_t>(i)) world.others.push_back(states[j]);
        plans[static_cast<std::size_t>(i)] =
            plan_step(cfg.vehicles[static_cast<std::size_t>(i)].planner, world,
                      inboxes[static_cast<std::size_t>(i)],
                      ctxs[static_cast<std::size_t>(i)], tick);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
    for (std::size_t i = 0; i < nveh; ++i) {
      if (!errors[i]) continue;
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        result.aborted = true;
        result.abort_reason = "tick " + std::to_string(tick) + ", vehicle '" + ids[i] +
                              "': " + e.what();
      }
    }
    if (result.aborted) break;

    const double t = tick * cfg.sim.dt;
    update_separation();

    std::vector<double> steer(nveh), accel(nveh);
    for (std::size_t i = 0; i < nveh; ++i) {
      result.local_min_events += plans[i].local_min_events;
      steer[i] = pure_pursuit_steer(states[i], plans[i].path, cfg.sim.lookahead,
                                    cfg.sim.steer_max);
      accel[i] = speed_track(states[i], plans[i].profile.v.front(), cfg.sim.kp_speed,
                             states[i].a_brake_max, cfg.sim.a_accel_max);
      TraceRow row{t,        states[i].x,    states[i].y, states[i].psi, states[i].beta,
                   states[i].yaw_rate, states[i].v, steer[i],      accel[i]};
      result.traces[i].rows.push_back(row);
      result.slp_log.push_back(plans[i].slp);
    }

    try {
      for (std::size_t i = 0; i < nveh; ++i)
        states[i] = vehicle_step(states[i], steer[i], accel[i], cfg.sim.dt, dyns[i]);
    } catch (const std::exception& e) {
      result.aborted = true;
      result.abort_reason = "tick " + std::to_string(tick) + ": " + e.what();
      break;
    }
    result.ticks = tick + 1;

    pending.clear();
    for (std::size_t i = 0; i < nveh; ++i) pending.push_back(plans[i].slp);

    bool all_done = true;
    for (const auto& s : states) all_done = all_done && s.x > finish_x;
    if (all_done) break;
  }

  if (!result.aborted) {
    update_separation();
    const double t_end = result.ticks * cfg.sim.dt;
    for (std::size_t i = 0; i < nveh; ++i) {
      TraceRow row{t_end,    states[i].x,    states[i].y, states[i].psi, states[i].beta,
                   states[i].yaw_rate, states[i].v, 0.0,           0.0};
      result.traces[i].rows.push_back(row);
    }
  }

  result.metrics.resize(nveh);
  for (std::size_t i = 0; i < nveh; ++i)
    result.metrics[i] = compute_metrics(result.traces[i], cfg.sim.dt);
  return result;
}

}  // namespace mergesim
