#pragma once

#include <json.hpp>

#include <functional>

#include "armrl/eval/rrt.hpp"
#include "armrl/ik.hpp"
#include "armrl/sampler.hpp"

namespace armrl::eval {

// Closed-loop deterministic policy. reset() is called once per episode.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void reset(const world::TaskSpec& task) { (void)task; }
  virtual world::JointVec act(const world::WorldState& state) = 0;
};

// Wraps a callable; used to expose trained agents to the evaluator.
class FunctionPolicy : public Policy {
 public:
  explicit FunctionPolicy(std::function<world::JointVec(const world::WorldState&)> fn)
      : fn_(std::move(fn)) {}
  world::JointVec act(const world::WorldState& state) override { return fn_(state); }

 private:
  std::function<world::JointVec(const world::WorldState&)> fn_;
};

// Near-optimal baseline: per-step interpolation toward a damped
// least-squares IK solution of the instantaneous goal.
class IkInterpPolicy : public Policy {
 public:
  IkInterpPolicy(world::ArmModel model, IkOptions opts = {})
      : model_(std::move(model)), opts_(opts) {}
  void reset(const world::TaskSpec& task) override;
  world::JointVec act(const world::WorldState& state) override;
  bool last_ik_failed() const { return last_failed_; }

 private:
  world::ArmModel model_;
  IkOptions opts_;
  world::JointVec warm_start_;
  bool last_failed_ = false;
};

// Uniform random actions; negative control.
class RandomPolicy : public Policy {
 public:
  RandomPolicy(world::ArmModel model, unsigned long long seed) : model_(std::move(model)), seed_(seed) {}
  void reset(const world::TaskSpec& task) override;
  world::JointVec act(const world::WorldState& state) override;

 private:
  world::ArmModel model_;
  unsigned long long seed_;
  world::Rng rng_{0};
  int episode_ = 0;
};

struct TaskSetOptions {
  int count = 200;
  unsigned long long seed = 7;
  bool with_obstacles = false;
  double goal_speed = 0.0;   // meters/second; 0 = static targets
  bool variable_speed = false;
};

// Frozen evaluation tasks, reproducible from the seed.
std::vector<world::TaskSpec> make_task_set(const world::ArmModel& model,
                                           const world::WorldConfig& cfg,
                                           const TaskSetOptions& opts);

// End-effector arc length of an executed joint trajectory.
double path_length(const world::ArmModel& model, const std::vector<world::JointVec>& qs);

struct TaskResult {
  int task_id = 0;
  bool success = false;
  bool collided = false;
  int steps = 0;
  double path_len = 0.0;
  double baseline_len = 0.0;
  double ratio = 0.0;        // valid only when ratio_valid
  bool ratio_valid = false;
  double latency_s = 0.0;    // mean per-step inference latency
};

struct EvalReport {
  std::vector<TaskResult> tasks;
  double success_rate = 0.0;
  double collision_rate = 0.0;
  double mean_ratio = 0.0;       // over mutually successful tasks
  int ratio_count = 0;
  double mean_latency_s = 0.0;
  double mean_steps = 0.0;
};

struct EvalOptions {
  bool obstacle_mode = false;    // any collision => failure, baseline = RRT
  bool variable_speed = false;
  int threads = 1;
  // policies without per-episode state (FunctionPolicy over const nets)
  // may run their episodes in parallel workers too
  bool policy_stateless = false;
  unsigned long long seed = 11;  // episode-level rng streams (speed switching, rrt)
  RrtOptions rrt;
};

EvalReport evaluate_policy(Policy& policy, const std::vector<world::TaskSpec>& tasks,
                           const world::ArmModel& model, const world::WorldConfig& cfg,
                           const world::RewardSchedule& schedule, const EvalOptions& opts);

nlohmann::ordered_json report_to_json(const EvalReport& report);
std::string report_to_csv(const EvalReport& report);
std::string format_report_table(const std::string& label, const EvalReport& report);

}  // namespace armrl::eval
