#pragma once

#include <optional>

#include "armrl/world.hpp"

namespace armrl::eval {

struct RrtOptions {
  double goal_bias = 0.1;
  double step = 0.05;             // joint-space L2 extension, radians
  double edge_resolution = 0.01;  // collision-check spacing, radians
  int max_samples = 20000;
  int ik_goal_configs = 5;
  double goal_radius = 0.02;
  double collision_threshold = 0.0;
};

// Goal-biased RRT in joint space. Success when a node's tip is within
// goal_radius of the Cartesian goal; the returned waypoint path is
// collision-free at edge_resolution.
std::optional<std::vector<world::JointVec>> rrt_plan(const world::ArmModel& model,
                                                     const world::JointVec& start_q,
                                                     const geom::Vec3& goal,
                                                     const std::vector<world::Obstacle>& obstacles,
                                                     world::Rng& rng, const RrtOptions& opts = {});

// Straight-line interpolation collision check between two configurations.
bool edge_collision_free(const world::ArmModel& model, const world::JointVec& a,
                         const world::JointVec& b, const std::vector<world::Obstacle>& obstacles,
                         double resolution, double collision_threshold = 0.0);

// End-effector arc length along a joint-space waypoint path, measured at
// the given interpolation resolution.
double joint_path_tip_length(const world::ArmModel& model,
                             const std::vector<world::JointVec>& path, double resolution = 0.01);

}  // namespace armrl::eval
