#pragma once

// Episode collection helpers shared by replay/trainer tests.

#include <functional>

#include "armrl/replay/trajectory.hpp"
#include "armrl/world.hpp"

namespace armrl::testing {

using ActionFn = std::function<world::JointVec(const world::WorldState&, world::Rng&)>;

inline replay::TrajectoryRecord rollout(world::Env& env, const world::TaskSpec& task,
                                        const ActionFn& act, world::Rng& rng,
                                        double training_fraction = 1.0) {
  env.reset(task);
  replay::TrajectoryRecord rec;
  rec.task = task;
  rec.states.push_back(env.state());
  for (;;) {
    const world::JointVec a = env.model().clamp_action(act(env.state(), rng));
    const world::StepOutcome out = env.step(a, training_fraction, rng);
    rec.actions.push_back(a);
    rec.rewards.push_back(out.reward);
    rec.collided.push_back(out.collided);
    rec.states.push_back(out.next_state);
    if (rec.first_collision < 0 && out.collided)
      rec.first_collision = rec.length() - 1;
    if (out.done) {
      rec.ended_done = true;
      rec.final_success = out.success;
      break;
    }
  }
  // any collision marks the episode as a collision failure for relabeling
  if (rec.first_collision >= 0) {
    rec.outcome = replay::TrajectoryRecord::Outcome::Collision;
  } else if (rec.final_success) {
    rec.outcome = replay::TrajectoryRecord::Outcome::Success;
  } else {
    rec.outcome = replay::TrajectoryRecord::Outcome::Timeout;
  }
  return rec;
}

inline world::JointVec random_action(const world::ArmModel& model, world::Rng& rng) {
  world::JointVec a(model.n_joints());
  std::uniform_real_distribution<double> u(-model.max_joint_step, model.max_joint_step);
  for (int i = 0; i < model.n_joints(); ++i) a[i] = u(rng);
  return a;
}

}  // namespace armrl::testing
