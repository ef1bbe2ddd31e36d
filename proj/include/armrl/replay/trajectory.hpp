#pragma once

#include <memory>
#include <optional>

#include "armrl/render.hpp"
#include "armrl/world.hpp"

namespace armrl::replay {

// One complete episode. states has one more entry than actions; states[t]
// is the snapshot before transition t and carries the goal used at that
// step. obs_seq, when materialized, parallels states.
struct TrajectoryRecord {
  enum class Outcome { Success, Collision, Timeout };

  world::TaskSpec task;
  std::vector<world::WorldState> states;
  std::vector<world::JointVec> actions;
  std::vector<double> rewards;
  std::vector<uint8_t> collided;
  Outcome outcome = Outcome::Timeout;
  int first_collision = -1;  // transition index, -1 if collision-free
  bool ended_done = false;
  bool final_success = false;
  bool relabeled = false;
  bool reversed = false;
  bool materialized = false;
  std::vector<std::vector<render::ObservationImage>> obs_seq;

  int length() const { return static_cast<int>(actions.size()); }
};

// View of one replay transition; shares ownership of its record so
// sampled batches stay valid across concurrent eviction.
struct TransitionRef {
  std::shared_ptr<const TrajectoryRecord> traj;
  int t = 0;

  const world::WorldState& state() const { return traj->states[static_cast<size_t>(t)]; }
  const world::WorldState& next_state() const { return traj->states[static_cast<size_t>(t) + 1]; }
  const world::JointVec& action() const { return traj->actions[static_cast<size_t>(t)]; }
  double reward() const { return traj->rewards[static_cast<size_t>(t)]; }
  bool collided() const { return traj->collided[static_cast<size_t>(t)] != 0; }
  bool last() const { return t + 1 == traj->length(); }
  bool done() const { return last() && traj->ended_done; }
  bool success() const { return last() && traj->final_success; }
  const geom::Vec3& goal() const { return next_state().goal; }
  const std::vector<render::ObservationImage>& obs() const {
    return traj->obs_seq[static_cast<size_t>(t)];
  }
  const std::vector<render::ObservationImage>& next_obs() const {
    return traj->obs_seq[static_cast<size_t>(t) + 1];
  }
};

// Throws std::invalid_argument when structural invariants are broken.
void validate_trajectory(const TrajectoryRecord& rec, const world::ArmModel& model);

// Hindsight relabeling: truncate a failed episode before its first
// collision and adopt the final retained tip position as the goal.
// Returns nullopt when fewer than two transitions survive.
std::optional<TrajectoryRecord> relabel_forward(const TrajectoryRecord& rec,
                                                const world::ArmModel& model,
                                                const world::RewardSchedule& schedule,
                                                double goal_radius);

// Time-reversed replay of a relabeled collision-free trajectory; actions
// negate, the goal becomes the original start tip. Excluded (nullopt) when
// the reversed sequence fails simulator replay within 1e-9 per joint.
std::optional<TrajectoryRecord> relabel_reverse(const TrajectoryRecord& rec,
                                                const world::ArmModel& model,
                                                const world::RewardSchedule& schedule,
                                                double goal_radius);

// Replays the stored action sequence through the kinematic transition and
// reports the worst per-joint deviation from the stored states.
double replay_deviation(const TrajectoryRecord& rec, const world::ArmModel& model);

}  // namespace armrl::replay
