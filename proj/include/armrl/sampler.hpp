#pragma once

#include "armrl/world.hpp"

namespace armrl::world {

// Samples a scene per the configured boxes: obstacles uniform in the
// obstacle region, a goal certified reachable collision-free by IK probes,
// and a collision-free start configuration. Throws SamplingFailure when
// the attempt budget runs out; callers retry with a fresh rng stream.
TaskSpec sample_task(Rng& rng, const ArmModel& model, const WorldConfig& cfg);

// Draws each joint uniformly within its limits.
JointVec random_joint_vector(Rng& rng, const ArmModel& model);

// Points the goal in a uniformly random direction at the given speed.
void set_goal_velocity(TaskSpec& task, Rng& rng, double speed);

}  // namespace armrl::world
