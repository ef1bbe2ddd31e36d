#include "armrl/world.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>

namespace armrl::world {

double ArmModel::total_reach() const {
  double total = 0.0;
  for (const Vec3& o : offsets) total += o.norm();
  return total;
}

void ArmModel::validate(const Aabb& goal_workspace) const {
  const int n = n_joints();
  if (n < 2) throw std::invalid_argument("ArmModel: need at least 2 joints");
  if (static_cast<int>(offsets.size()) != n || static_cast<int>(link_radius.size()) != n ||
      limit_lo.size() != n || limit_hi.size() != n)
    throw std::invalid_argument("ArmModel: inconsistent field sizes");
  for (int i = 0; i < n; ++i) {
    if (limit_lo[i] >= limit_hi[i]) throw std::invalid_argument("ArmModel: joint limit lo >= hi");
    if (offsets[i].norm() <= 0.0) throw std::invalid_argument("ArmModel: zero-length link");
    if (link_radius[i] <= 0.0) throw std::invalid_argument("ArmModel: non-positive link radius");
    if (std::abs(axes[i].norm() - 1.0) > 1e-9)
      throw std::invalid_argument("ArmModel: joint axis must be unit length");
  }
  if (max_joint_step <= 0.0) throw std::invalid_argument("ArmModel: non-positive action bound");

  const double reach = total_reach();
  for (int corner = 0; corner < 8; ++corner) {
    Vec3 c = goal_workspace.center;
    for (int i = 0; i < 3; ++i) c[i] += ((corner >> i) & 1 ? 1.0 : -1.0) * goal_workspace.half[i];
    if (c.norm() > reach)
      throw std::invalid_argument("ArmModel: goal workspace exceeds total reach");
  }
}

JointVec ArmModel::clamp_to_limits(const JointVec& q) const {
  return q.cwiseMax(limit_lo).cwiseMin(limit_hi);
}

JointVec ArmModel::clamp_action(const JointVec& a) const {
  return a.cwiseMax(-max_joint_step).cwiseMin(max_joint_step);
}

ArmModel default_arm(int n_joints) {
  if (n_joints < 3 || n_joints > 6) throw std::invalid_argument("default_arm: supports 3-6 joints");
  ArmModel m;
  m.axes.push_back(Vec3::UnitZ());
  m.offsets.push_back({0.0, 0.0, 0.10});
  // Distribute ~0.85 m over the remaining pitch links.
  const std::vector<std::vector<double>> plans{
      {0.45, 0.40}, {0.32, 0.27, 0.26}, {0.28, 0.23, 0.18, 0.16}, {0.24, 0.20, 0.16, 0.14, 0.11}};
  for (const double len : plans[static_cast<size_t>(n_joints - 3)]) {
    m.axes.push_back(Vec3::UnitY());
    m.offsets.push_back({len, 0.0, 0.0});
  }
  m.link_radius.assign(static_cast<size_t>(n_joints), 0.03);
  m.limit_lo = JointVec::Constant(n_joints, -2.4);
  m.limit_hi = JointVec::Constant(n_joints, 2.4);
  m.limit_lo[0] = -M_PI;
  m.limit_hi[0] = M_PI;
  m.max_joint_step = 0.05;
  m.validate(WorldConfig{}.goal_workspace);
  return m;
}

ForwardKin forward_kinematics(const ArmModel& model, const JointVec& q) {
  const int n = model.n_joints();
  if (q.size() != n) throw std::invalid_argument("forward_kinematics: dimension mismatch");
  ForwardKin out;
  out.segments.reserve(static_cast<size_t>(n));
  out.joint_origins.reserve(static_cast<size_t>(n));
  out.joint_axes_world.reserve(static_cast<size_t>(n));
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
  Vec3 p = Vec3::Zero();
  for (int i = 0; i < n; ++i) {
    out.joint_origins.push_back(p);
    rot = rot * Eigen::AngleAxisd(q[i], model.axes[static_cast<size_t>(i)]).toRotationMatrix();
    out.joint_axes_world.push_back(rot * model.axes[static_cast<size_t>(i)]);
    const Vec3 next = p + rot * model.offsets[static_cast<size_t>(i)];
    out.segments.push_back({p, next});
    p = next;
  }
  out.tip = p;
  return out;
}

Eigen::Matrix3Xd jacobian(const ArmModel& model, const JointVec& q) {
  const ForwardKin fk = forward_kinematics(model, q);
  Eigen::Matrix3Xd jac(3, model.n_joints());
  for (int j = 0; j < model.n_joints(); ++j) {
    const size_t js = static_cast<size_t>(j);
    jac.col(j) = fk.joint_axes_world[js].cross(fk.tip - fk.joint_origins[js]);
  }
  return jac;
}

MinDistance min_distance(const ArmModel& model, const JointVec& q,
                         const std::vector<Obstacle>& obstacles, double collision_threshold,
                         double empty_sentinel) {
  const ForwardKin fk = forward_kinematics(model, q);
  double best = empty_sentinel;
  for (size_t li = 0; li < fk.segments.size(); ++li) {
    for (const Obstacle& ob : obstacles) {
      double d;
      if (ob.kind == Obstacle::Kind::Sphere) {
        d = geom::segment_sphere_signed_distance(fk.segments[li], {ob.center, ob.dims[0]});
      } else {
        d = geom::segment_aabb_signed_distance(fk.segments[li], {ob.center, ob.dims});
      }
      best = std::min(best, d - model.link_radius[li]);
    }
  }
  return {best, best < collision_threshold};
}

double collision_penalty(double training_fraction, const RewardSchedule& schedule) {
  const double f = std::clamp(training_fraction, 0.0, 1.0);
  if (f <= schedule.ramp_start_fraction) return 0.0;
  if (f >= schedule.ramp_end_fraction) return schedule.collision_penalty_max;
  const double span = schedule.ramp_end_fraction - schedule.ramp_start_fraction;
  return schedule.collision_penalty_max * (f - schedule.ramp_start_fraction) / span;
}

GoalUpdate update_goal(const Vec3& goal, const Vec3& velocity, const Aabb& workspace, double dt) {
  Vec3 g = goal + velocity * dt;
  Vec3 v = velocity;
  for (int i = 0; i < 3; ++i) {
    if (velocity[i] == 0.0) continue;
    const double lo = workspace.center[i] - workspace.half[i];
    const double hi = workspace.center[i] + workspace.half[i];
    if (g[i] < lo) {
      g[i] = lo + (lo - g[i]);
      v[i] = -v[i];
    } else if (g[i] > hi) {
      g[i] = hi - (g[i] - hi);
      v[i] = -v[i];
    }
    g[i] = std::clamp(g[i], lo, hi);  // guards extreme dt*speed overshoot
  }
  return {g, v};
}

StepOutcome step(const ArmModel& model, const WorldConfig& cfg,
                 const std::vector<Obstacle>& obstacles, const RewardSchedule& schedule,
                 const WorldState& state, const JointVec& action, double training_fraction,
                 const Vec3& goal_velocity, Vec3* velocity_out) {
  if (action.size() != model.n_joints()) throw std::invalid_argument("step: dimension mismatch");
  const JointVec a = model.clamp_action(action);
  const JointVec q_next = model.clamp_to_limits(state.q + a);
  const GoalUpdate gu = update_goal(state.goal, goal_velocity, cfg.goal_workspace, cfg.dt);
  if (velocity_out) *velocity_out = gu.velocity;

  const MinDistance md =
      min_distance(model, q_next, obstacles, cfg.collision_threshold, cfg.empty_scene_sentinel);
  const Vec3 tip = forward_kinematics(model, q_next).tip;

  StepOutcome out;
  out.next_state = WorldState{q_next, gu.goal, state.step_index + 1, md.collided};
  out.collided = md.collided;
  out.reward = -schedule.step_penalty -
               (md.collided ? collision_penalty(training_fraction, schedule) : 0.0);
  out.success = (tip - gu.goal).norm() <= cfg.goal_radius;
  out.done = out.success || out.next_state.step_index >= schedule.max_steps;
  out.tip_position = tip;
  return out;
}

void Env::reset(const TaskSpec& task) {
  task_ = task;
  state_ = WorldState{task.start_q, task.goal0, 0, false};
  goal_velocity_ = task.goal_velocity;
}

StepOutcome Env::step(const JointVec& action, double training_fraction, Rng& rng) {
  if (variable_speed && !cfg_.speed_set.empty()) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < cfg_.switch_probability) {
      std::uniform_int_distribution<size_t> pick(0, cfg_.speed_set.size() - 1);
      const double speed = cfg_.speed_set[pick(rng)];
      const double norm = goal_velocity_.norm();
      if (norm > 1e-12) goal_velocity_ = goal_velocity_ / norm * speed;
    }
  }
  Vec3 vel_out = goal_velocity_;
  const StepOutcome out = world::step(model_, cfg_, task_.obstacles, schedule_, state_, action,
                                      training_fraction, goal_velocity_, &vel_out);
  goal_velocity_ = vel_out;
  state_ = out.next_state;
  return out;
}

}  // namespace armrl::world
