#pragma once

#include <deque>
#include <filesystem>
#include <mutex>

#include "armrl/replay/trajectory.hpp"

namespace armrl::replay {

using Rng = std::mt19937_64;

struct BufferConfig {
  size_t capacity = 300000;            // transitions, original pool
  size_t relabeled_capacity = 300000;  // transitions, relabeled pool
  double relabel_ratio = 0.5;          // relabeled share when sampling
};

struct StoreResult {
  size_t first_index = 0;
  size_t count = 0;
};

// FIFO goal-conditioned replay with separate original and relabeled pools.
// One writer (the rollout loop), one trainer reader, plus a re-render
// worker that publishes materialized relabeled trajectories atomically.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(const BufferConfig& cfg, const world::ArmModel& model)
      : cfg_(cfg), model_(model) {}

  StoreResult store(TrajectoryRecord rec);
  StoreResult store_relabeled(TrajectoryRecord rec);

  // nullopt = retry later (no eligible data for the requested mixture).
  std::optional<std::vector<TransitionRef>> sample(Rng& rng, int batch) const;

  size_t size() const { return total_ - dropped_; }
  size_t relabeled_size() const;
  size_t episodes() const { return pool_.size(); }

  // Snapshot persistence: versioned binary records plus a text manifest in
  // one file. Observations are not stored; materialized trajectories are
  // re-rendered on load (bit-exact by the renderer contract).
  void save(const std::filesystem::path& path) const;
  void load(const std::filesystem::path& path, const std::vector<render::CameraView>& views,
            double goal_render_radius);

  const BufferConfig& config() const { return cfg_; }

 private:
  struct Entry {
    size_t start_abs = 0;
    std::shared_ptr<TrajectoryRecord> rec;
  };

  static TransitionRef pick(const std::deque<Entry>& pool, size_t dropped, size_t total, Rng& rng);

  BufferConfig cfg_;
  world::ArmModel model_;

  std::deque<Entry> pool_;
  size_t total_ = 0;
  size_t dropped_ = 0;

  mutable std::mutex relabeled_mu_;
  std::deque<Entry> relabeled_;
  size_t relabeled_total_ = 0;
  size_t relabeled_dropped_ = 0;
};

}  // namespace armrl::replay
