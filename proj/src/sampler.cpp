#include "armrl/sampler.hpp"

#include "armrl/ik.hpp"

namespace armrl::world {

namespace {

Vec3 uniform_in_box(Rng& rng, const Aabb& box) {
  Vec3 p;
  for (int i = 0; i < 3; ++i) {
    std::uniform_real_distribution<double> u(box.center[i] - box.half[i],
                                             box.center[i] + box.half[i]);
    p[i] = u(rng);
  }
  return p;
}

}  // namespace

JointVec random_joint_vector(Rng& rng, const ArmModel& model) {
  JointVec q(model.n_joints());
  for (int i = 0; i < model.n_joints(); ++i) {
    std::uniform_real_distribution<double> u(model.limit_lo[i], model.limit_hi[i]);
    q[i] = u(rng);
  }
  return q;
}

TaskSpec sample_task(Rng& rng, const ArmModel& model, const WorldConfig& cfg) {
  TaskSpec task;

  std::uniform_real_distribution<double> dim(cfg.obstacle_dim_lo, cfg.obstacle_dim_hi);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int i = 0; i < cfg.obstacle_count; ++i) {
    Obstacle ob;
    ob.kind = coin(rng) ? Obstacle::Kind::Box : Obstacle::Kind::Sphere;
    ob.center = uniform_in_box(rng, cfg.obstacle_region);
    if (ob.kind == Obstacle::Kind::Sphere) {
      ob.dims = Vec3(dim(rng), 0.0, 0.0);
    } else {
      ob.dims = Vec3(dim(rng), dim(rng), dim(rng));
    }
    task.obstacles.push_back(ob);
  }

  eval::IkOptions ik;
  ik.tolerance = cfg.goal_radius * 0.5;
  bool goal_ok = false;
  for (int attempt = 0; attempt < cfg.max_sample_attempts && !goal_ok; ++attempt) {
    task.goal0 = uniform_in_box(rng, cfg.goal_workspace);
    if (task.obstacles.empty()) {
      goal_ok = true;  // nothing to reject against
      break;
    }
    for (int probe = 0; probe < cfg.ik_probe_restarts && !goal_ok; ++probe) {
      const auto q = eval::dls_ik(model, task.goal0, random_joint_vector(rng, model), ik);
      if (q && !min_distance(model, *q, task.obstacles, cfg.collision_threshold,
                             cfg.empty_scene_sentinel)
                    .collided) {
        goal_ok = true;
      }
    }
  }
  if (!goal_ok) throw SamplingFailure("sample_task: no reachable collision-free goal found");

  for (int attempt = 0; attempt < cfg.max_sample_attempts; ++attempt) {
    const JointVec q = random_joint_vector(rng, model);
    if (!min_distance(model, q, task.obstacles, cfg.collision_threshold, cfg.empty_scene_sentinel)
             .collided) {
      task.start_q = q;
      return task;
    }
  }
  throw SamplingFailure("sample_task: no collision-free start configuration found");
}

void set_goal_velocity(TaskSpec& task, Rng& rng, double speed) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 dir(n(rng), n(rng), n(rng));
  while (dir.norm() < 1e-9) dir = Vec3(n(rng), n(rng), n(rng));
  task.goal_velocity = dir.normalized() * speed;
}

}  // namespace armrl::world
