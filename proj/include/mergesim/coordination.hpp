#pragma once

#include <string>
#include <vector>

#include "mergesim/path_fit.hpp"
#include "mergesim/rng.hpp"
#include "mergesim/speed_opt.hpp"
#include "mergesim/types.hpp"

namespace mergesim {

/// The unit exchanged over the simulated V2V bus. waypoints[0] is the sender's
/// pose at planning time, followed by its predicted positions; speeds are the
/// per-step profile, so speeds.size() == waypoints.size() - 1.
struct SlpMessage {
  std::string sender;
  long tick = 0;
  std::vector<Vec2> waypoints;
  std::vector<double> speeds;
  SlpMeta meta;
};

/// NDJSON codec for the SLP log (one message per line).
std::string slp_to_json_line(const SlpMessage& m);
SlpMessage slp_from_json_line(const std::string& line);

/// Shape checks for a message (length invariants). Throws SchemaError.
void validate_slp_message(const SlpMessage& m);

struct PlanContext {
  PotentialParams pf;
  IsoWeights weights;
  double dt = 0.1;
  int n = 10;
  double mu = 0.9;
  double g = 9.81;
  double v_target = 20.0;
  double v_limit = 33.3;
  double v_floor = 0.1;
  double opt_tol = 1e-4;
  double kappa_max = 0.08;
  double fit_weight_decay = 0.0;
};

struct PlanResult {
  CubicPath path;
  SpeedProfile profile;
  SlpMessage slp;
  int local_min_events = 0;
};

/// One planning cycle for world.host.
///   PF_CS  - potential-field path, constant-speed profile (cap-limited)
///   PF_SP  - same path, speed profile optimized with the awareness weight off
///   PF_ISO - full interactive optimization against the inbox; degrades to
///            PF_SP behavior when the inbox is empty
PlanResult plan_step(PlannerKind kind, const FieldWorld& world,
                     const std::vector<SlpMessage>& inbox, const PlanContext& ctx,
                     long tick);

/// Fan-out of one tick's messages to every other vehicle, with an optional
/// seeded per-delivery drop. Inboxes come back in receiver order. Throws
/// BusIntegrityError when a sender posted twice.
std::vector<std::vector<SlpMessage>> bus_exchange(const std::vector<SlpMessage>& sent,
                                                  const std::vector<std::string>& receivers,
                                                  double drop_probability, Rng& rng);

}  // namespace mergesim
