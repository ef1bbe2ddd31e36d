#pragma once

#include <Eigen/Core>

#include <random>
#include <stdexcept>
#include <vector>

#include "armrl/geometry.hpp"

namespace armrl::world {

using geom::Aabb;
using geom::Vec3;
using JointVec = Eigen::VectorXd;
using Rng = std::mt19937_64;

struct SamplingFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Serial revolute chain. Joint i rotates about axes[i] (expressed in the
// frame of link i-1); offsets[i] is the rigid link from joint i to joint
// i+1 in the rotated frame. The chain root sits at the world origin.
struct ArmModel {
  std::vector<Vec3> axes;
  std::vector<Vec3> offsets;
  std::vector<double> link_radius;
  JointVec limit_lo;
  JointVec limit_hi;
  double max_joint_step = 0.05;  // |action_i| bound, radians per env step

  int n_joints() const { return static_cast<int>(axes.size()); }
  double total_reach() const;
  void validate(const Aabb& goal_workspace) const;

  JointVec clamp_to_limits(const JointVec& q) const;
  JointVec clamp_action(const JointVec& a) const;
};

// 4-DOF default: yaw base plus three pitch joints, ~0.85 m of links on a
// 0.10 m riser so the V-B goal box is inside the reach envelope.
ArmModel default_arm(int n_joints = 4);

struct Obstacle {
  enum class Kind { Sphere, Box };
  Kind kind = Kind::Sphere;
  Vec3 center = Vec3::Zero();
  Vec3 dims = Vec3::Zero();  // [radius,-,-] for spheres, half-extents for boxes
};

struct TaskSpec {
  std::vector<Obstacle> obstacles;
  Vec3 goal0 = Vec3::Zero();
  Vec3 goal_velocity = Vec3::Zero();
  JointVec start_q;
};

struct WorldState {
  JointVec q;
  Vec3 goal = Vec3::Zero();
  int step_index = 0;
  bool in_collision = false;
};

struct RewardSchedule {
  double step_penalty = 0.01;
  double collision_penalty_max = 0.1;
  double ramp_start_fraction = 0.3;
  double ramp_end_fraction = 0.9;
  int max_steps = 100;
};

struct StepOutcome {
  WorldState next_state;
  double reward = 0.0;
  bool done = false;
  bool success = false;
  bool collided = false;
  Vec3 tip_position = Vec3::Zero();
};

struct ForwardKin {
  std::vector<geom::Segment> segments;
  std::vector<Vec3> joint_origins;
  std::vector<Vec3> joint_axes_world;
  Vec3 tip = Vec3::Zero();
};

struct MinDistance {
  double distance = 0.0;
  bool collided = false;
};

ForwardKin forward_kinematics(const ArmModel& model, const JointVec& q);

// Column j = axis_j x (tip - origin_j), world frame, meters per radian.
Eigen::Matrix3Xd jacobian(const ArmModel& model, const JointVec& q);

// Min over (link, obstacle) of segment-to-shape distance minus the link
// collision radius. Empty scene yields the sentinel.
MinDistance min_distance(const ArmModel& model, const JointVec& q,
                         const std::vector<Obstacle>& obstacles,
                         double collision_threshold = 0.0, double empty_sentinel = 1e9);

// Penalty magnitude ramp: 0 until ramp_start, linear to collision_penalty_max
// at ramp_end, flat after.
double collision_penalty(double training_fraction, const RewardSchedule& schedule);

struct GoalUpdate {
  Vec3 goal;
  Vec3 velocity;
};

// Advances the goal by velocity*dt, reflecting at workspace faces.
GoalUpdate update_goal(const Vec3& goal, const Vec3& velocity, const Aabb& workspace, double dt);

struct WorldConfig {
  Aabb goal_workspace{{0.5, 0.0, 0.25}, {0.2, 0.2, 0.1}};
  Aabb obstacle_region{{0.5, 0.0, 0.125}, {0.15, 0.15, 0.075}};
  double obstacle_dim_lo = 0.06;
  double obstacle_dim_hi = 0.09;
  int obstacle_count = 2;
  double goal_radius = 0.02;
  double collision_threshold = 0.0;
  double empty_scene_sentinel = 1e9;
  double dt = 0.05;
  // Goal dynamics: speed drawn from speed_set at reset when dynamic_goals;
  // in variable mode it is resampled with switch_probability per step.
  std::vector<double> speed_set{0.05, 0.1, 0.2};
  double switch_probability = 0.05;
  int max_sample_attempts = 200;
  int ik_probe_restarts = 5;
};

StepOutcome step(const ArmModel& model, const WorldConfig& cfg, const std::vector<Obstacle>& obstacles,
                 const RewardSchedule& schedule, const WorldState& state, const JointVec& action,
                 double training_fraction, const Vec3& goal_velocity = Vec3::Zero(),
                 Vec3* velocity_out = nullptr);

// Stateful episode wrapper over the pure ops. Owns the current task,
// state and goal velocity; speed switching draws from the supplied rng.
class Env {
 public:
  Env(ArmModel model, WorldConfig cfg, RewardSchedule schedule)
      : model_(std::move(model)), cfg_(std::move(cfg)), schedule_(schedule) {}

  void reset(const TaskSpec& task);
  StepOutcome step(const JointVec& action, double training_fraction, Rng& rng);

  const WorldState& state() const { return state_; }
  const TaskSpec& task() const { return task_; }
  const ArmModel& model() const { return model_; }
  const WorldConfig& config() const { return cfg_; }
  const RewardSchedule& schedule() const { return schedule_; }
  const Vec3& goal_velocity() const { return goal_velocity_; }
  bool variable_speed = false;

 private:
  ArmModel model_;
  WorldConfig cfg_;
  RewardSchedule schedule_;
  TaskSpec task_;
  WorldState state_;
  Vec3 goal_velocity_ = Vec3::Zero();
};

}  // namespace armrl::world
