#pragma once

#include <atomic>
#include <condition_variable>
#include <thread>

#include "armrl/replay/buffer.hpp"

namespace armrl::replay {

// Materializes every state's observations with the record's (relabeled)
// goals. Returns the same record with obs_seq filled and materialized set.
TrajectoryRecord re_render(TrajectoryRecord rec, const world::ArmModel& model,
                           const std::vector<render::CameraView>& views,
                           double goal_render_radius);

// Background re-render worker: the trainer enqueues relabeled trajectories
// without blocking; rendered results are published to the buffer's
// relabeled pool. Bounded queue; enqueue reports false when full.
class RerenderWorker {
 public:
  RerenderWorker(ReplayBuffer& buffer, world::ArmModel model,
                 std::vector<render::CameraView> views, double goal_render_radius,
                 size_t queue_depth = 64)
      : buffer_(buffer),
        model_(std::move(model)),
        views_(std::move(views)),
        radius_(goal_render_radius),
        depth_(queue_depth) {
    thread_ = std::thread([this] { run(); });
  }

  ~RerenderWorker() { stop(); }

  bool enqueue(TrajectoryRecord rec);
  // Blocks until the queue is empty and in-flight work is published.
  void flush();
  void stop();

  size_t queue_depth() const { return depth_; }
  size_t dropped() const { return dropped_.load(); }

 private:
  void run();

  ReplayBuffer& buffer_;
  world::ArmModel model_;
  std::vector<render::CameraView> views_;
  double radius_;
  size_t depth_;

  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<TrajectoryRecord> queue_;
  bool stopping_ = false;
  int in_flight_ = 0;
  std::atomic<size_t> dropped_{0};
  std::thread thread_;
};

}  // namespace armrl::replay
