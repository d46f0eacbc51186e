#include "mergesim/coordination.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

namespace mergesim {

using nlohmann::json;

std::string slp_to_json_line(const SlpMessage& m) {
  json wps = json::array();
  for (const auto& w : m.waypoints) wps.push_back({w.x, w.y});
  json j{{"sender", m.sender},
         {"tick", m.tick},
         {"waypoints", wps},
         {"speeds", m.speeds},
         {"meta",
          {{"mass_kg", m.meta.mass},
           {"wheelbase_m", m.meta.wheelbase},
           {"a_brake_max_mps2", m.meta.a_brake_max},
           {"heading_rad", m.meta.heading},
           {"speed_mps", m.meta.speed}}}};
  return j.dump();
}

SlpMessage slp_from_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("bad SLP log line: ") + e.what());
  }
  SlpMessage m;
  try {
    m.sender = j.at("sender").get<std::string>();
    m.tick = j.at("tick").get<long>();
    for (const auto& w : j.at("waypoints")) m.waypoints.push_back({w.at(0), w.at(1)});
    m.speeds = j.at("speeds").get<std::vector<double>>();
    const json& meta = j.at("meta");
    m.meta.mass = meta.at("mass_kg").get<double>();
    m.meta.wheelbase = meta.at("wheelbase_m").get<double>();
    m.meta.a_brake_max = meta.at("a_brake_max_mps2").get<double>();
    m.meta.heading = meta.at("heading_rad").get<double>();
    m.meta.speed = meta.at("speed_mps").get<double>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("bad SLP log line: ") + e.what());
  }
  validate_slp_message(m);
  return m;
}

void validate_slp_message(const SlpMessage& m) {
  if (m.sender.empty()) throw SchemaError("SLP message without sender");
  if (m.waypoints.size() < 4)
    throw SchemaError("SLP message from '" + m.sender + "' carries fewer than 4 waypoints");
  if (m.speeds.size() + 1 != m.waypoints.size())
    throw SchemaError("SLP message from '" + m.sender +
                      "': speeds length must be waypoints length - 1");
}

namespace {

SlpMeta meta_of(const VehicleState& s) {
  SlpMeta m;
  m.mass = s.mass;
  m.wheelbase = s.wheelbase;
  m.a_brake_max = s.a_brake_max;
  m.heading = s.psi;
  m.speed = s.v;
  return m;
}

SharedPath to_shared(const SlpMessage& m) {
  SharedPath sp;
  sp.waypoints = m.waypoints;
  sp.meta = m.meta;
  return sp;
}

SlpMessage build_message(const VehicleState& self, const FieldWorld& world,
                         const PlanContext& ctx, const SpeedProfile& profile, long tick,
                         int* events) {
  WaypointQueue q = generate_waypoints_resilient(self, world, ctx.pf, profile.v, ctx.dt,
                                                 0.0, ctx.n, events);
  SlpMessage m;
  m.sender = self.id;
  m.tick = tick;
  m.waypoints.reserve(q.points.size() + 1);
  m.waypoints.push_back({self.x, self.y});
  m.waypoints.insert(m.waypoints.end(), q.points.begin(), q.points.end());
  m.speeds = profile.v;
  m.meta = meta_of(self);
  return m;
}

}  // namespace

PlanResult plan_step(PlannerKind kind, const FieldWorld& world,
                     const std::vector<SlpMessage>& inbox, const PlanContext& ctx,
                     long tick) {
  const VehicleState& self = world.host;
  PlanResult out;

  // Geometric plan: fixed-step waypoints at the current speed, cubic fit.
  double step = std::max(self.v, ctx.v_floor) * ctx.dt;
  WaypointQueue nominal = generate_waypoints_resilient(
      self, world, ctx.pf, {}, ctx.dt, step, ctx.n, &out.local_min_events);
  double horizon_len = 0.0;
  for (double s : nominal.step_lengths) horizon_len += s;
  std::vector<double> w = fit_weights(nominal.points.size(), ctx.fit_weight_decay);
  FitProblem fp =
      make_fit_problem(nominal, w, bounds_from_curvature(ctx.kappa_max, horizon_len));
  out.path = fit_cubic(fp);

  double cap = max_speed_cap(out.path, ctx.v_limit, ctx.mu, ctx.g);
  std::vector<double> caps(static_cast<std::size_t>(ctx.n), cap);

  IsoProblem prob;
  prob.world = world;
  prob.pf = ctx.pf;
  prob.dt = ctx.dt;
  prob.n = ctx.n;
  prob.caps = caps;
  prob.v_target = ctx.v_target;
  prob.v_floor = ctx.v_floor;
  prob.opt_tol = ctx.opt_tol;

  switch (kind) {
    case PlannerKind::PF_CS: {
      out.profile.caps = caps;
      out.profile.v.assign(static_cast<std::size_t>(ctx.n),
                           std::clamp(self.v, 0.0, cap));
      prob.weights = {ctx.weights.w1, ctx.weights.w2, 0.0};
      out.profile.objective = iso_objective(out.profile.v, prob);
      break;
    }
    case PlannerKind::PF_SP: {
      prob.weights = {ctx.weights.w1, ctx.weights.w2, 0.0};
      out.profile = optimize_speeds(prob);
      break;
    }
    case PlannerKind::PF_ISO: {
      if (inbox.empty() || ctx.weights.w3 == 0.0) {
        // No shared paths (or the awareness term is off): identical to PF_SP.
        prob.weights = {ctx.weights.w1, ctx.weights.w2, 0.0};
        out.profile = optimize_speeds(prob);
      } else {
        prob.weights = ctx.weights;
        for (const auto& m : inbox) prob.shared.push_back(to_shared(m));
        out.profile = optimize_speeds(prob);
      }
      break;
    }
  }

  out.slp = build_message(self, world, ctx, out.profile, tick, &out.local_min_events);
  return out;
}

std::vector<std::vector<SlpMessage>> bus_exchange(const std::vector<SlpMessage>& sent,
                                                  const std::vector<std::string>& receivers,
                                                  double drop_probability, Rng& rng) {
  std::set<std::string> seen;
  for (const auto& m : sent)
    if (!seen.insert(m.sender).second)
      throw BusIntegrityError("duplicate SLP message from sender '" + m.sender +
                              "' in one tick");

  std::vector<std::vector<SlpMessage>> inboxes(receivers.size());
  for (std::size_t r = 0; r < receivers.size(); ++r) {
    for (const auto& m : sent) {
      if (m.sender == receivers[r]) continue;
      if (drop_probability > 0.0 && rng.next_uniform() < drop_probability) continue;
      inboxes[r].push_back(m);
    }
  }
  return inboxes;
}

}  // namespace mergesim
