#include "armrl/eval/rrt.hpp"

#include "armrl/ik.hpp"
#include "armrl/sampler.hpp"

namespace armrl::eval {

bool edge_collision_free(const world::ArmModel& model, const world::JointVec& a,
                         const world::JointVec& b, const std::vector<world::Obstacle>& obstacles,
                         double resolution, double collision_threshold) {
  const double dist = (b - a).norm();
  const int checks = std::max(1, static_cast<int>(std::ceil(dist / resolution)));
  for (int i = 0; i <= checks; ++i) {
    const world::JointVec q = a + (b - a) * (static_cast<double>(i) / checks);
    if (world::min_distance(model, q, obstacles, collision_threshold).collided) return false;
  }
  return true;
}

double joint_path_tip_length(const world::ArmModel& model,
                             const std::vector<world::JointVec>& path, double resolution) {
  double total = 0.0;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const double dist = (path[i + 1] - path[i]).norm();
    const int steps = std::max(1, static_cast<int>(std::ceil(dist / resolution)));
    geom::Vec3 prev = world::forward_kinematics(model, path[i]).tip;
    for (int k = 1; k <= steps; ++k) {
      const world::JointVec q = path[i] + (path[i + 1] - path[i]) * (static_cast<double>(k) / steps);
      const geom::Vec3 tip = world::forward_kinematics(model, q).tip;
      total += (tip - prev).norm();
      prev = tip;
    }
  }
  return total;
}

std::optional<std::vector<world::JointVec>> rrt_plan(const world::ArmModel& model,
                                                     const world::JointVec& start_q,
                                                     const geom::Vec3& goal,
                                                     const std::vector<world::Obstacle>& obstacles,
                                                     world::Rng& rng, const RrtOptions& opts) {
  if (world::min_distance(model, start_q, obstacles, opts.collision_threshold).collided)
    return std::nullopt;
  if ((world::forward_kinematics(model, start_q).tip - goal).norm() <= opts.goal_radius)
    return std::vector<world::JointVec>{start_q};

  // collision-free IK solutions provide the goal bias targets
  std::vector<world::JointVec> goal_configs;
  IkOptions ik;
  ik.tolerance = opts.goal_radius * 0.5;
  for (int i = 0; i < opts.ik_goal_configs * 4 &&
                  static_cast<int>(goal_configs.size()) < opts.ik_goal_configs;
       ++i) {
    const auto q = dls_ik(model, goal, world::random_joint_vector(rng, model), ik);
    if (q && !world::min_distance(model, *q, obstacles, opts.collision_threshold).collided)
      goal_configs.push_back(*q);
  }

  struct Node {
    world::JointVec q;
    int parent;
  };
  std::vector<Node> tree{{start_q, -1}};
  std::uniform_real_distribution<double> coin(0.0, 1.0);

  for (int it = 0; it < opts.max_samples; ++it) {
    world::JointVec target;
    if (!goal_configs.empty() && coin(rng) < opts.goal_bias) {
      std::uniform_int_distribution<size_t> pick(0, goal_configs.size() - 1);
      target = goal_configs[pick(rng)];
    } else {
      target = world::random_joint_vector(rng, model);
    }

    int nearest = 0;
    double best = (tree[0].q - target).squaredNorm();
    for (size_t i = 1; i < tree.size(); ++i) {
      const double d = (tree[i].q - target).squaredNorm();
      if (d < best) {
        best = d;
        nearest = static_cast<int>(i);
      }
    }

    const world::JointVec& q_near = tree[static_cast<size_t>(nearest)].q;
    world::JointVec delta = target - q_near;
    const double dist = delta.norm();
    if (dist < 1e-12) continue;
    if (dist > opts.step) delta *= opts.step / dist;
    const world::JointVec q_new = model.clamp_to_limits(q_near + delta);
    if (!edge_collision_free(model, q_near, q_new, obstacles, opts.edge_resolution,
                             opts.collision_threshold))
      continue;
    tree.push_back({q_new, nearest});

    if ((world::forward_kinematics(model, q_new).tip - goal).norm() <= opts.goal_radius) {
      std::vector<world::JointVec> path;
      for (int idx = static_cast<int>(tree.size()) - 1; idx >= 0;
           idx = tree[static_cast<size_t>(idx)].parent)
        path.push_back(tree[static_cast<size_t>(idx)].q);
      std::reverse(path.begin(), path.end());
      return path;
    }
  }
  return std::nullopt;
}

}  // namespace armrl::eval
