#pragma once

#include <optional>

#include "armrl/world.hpp"

namespace armrl::eval {

struct IkOptions {
  int max_iters = 100;
  double damping = 0.05;
  double tolerance = 1e-4;  // meters
  double max_step = 0.2;    // per-iteration joint-space norm cap, radians
};

// Damped least-squares IK toward a Cartesian tip target. Returns a joint
// vector within limits with |tip(q) - target| < tolerance, or nullopt.
std::optional<world::JointVec> dls_ik(const world::ArmModel& model, const geom::Vec3& target,
                                      const world::JointVec& seed_q, const IkOptions& opts = {});

// Random-restart wrapper; restart seeds are drawn uniformly in the limits.
std::optional<world::JointVec> dls_ik_restarts(const world::ArmModel& model,
                                               const geom::Vec3& target, int restarts,
                                               world::Rng& rng, const IkOptions& opts = {});

}  // namespace armrl::eval
