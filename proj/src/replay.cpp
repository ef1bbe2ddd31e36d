#include "armrl/replay/rerender.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "armrl/serialize.hpp"

namespace armrl::replay {

void validate_trajectory(const TrajectoryRecord& rec, const world::ArmModel& model) {
  const size_t K = rec.actions.size();
  if (K < 1) throw std::invalid_argument("trajectory: empty");
  if (rec.states.size() != K + 1 || rec.rewards.size() != K || rec.collided.size() != K)
    throw std::invalid_argument("trajectory: inconsistent array lengths");
  int first = -1;
  for (size_t t = 0; t < K; ++t) {
    if (rec.states[t].step_index + 1 != rec.states[t + 1].step_index)
      throw std::invalid_argument("trajectory: non-contiguous step indices");
    if (rec.actions[t].size() != model.n_joints())
      throw std::invalid_argument("trajectory: action dimension mismatch");
    if (rec.actions[t].cwiseAbs().maxCoeff() > model.max_joint_step + 1e-12)
      throw std::invalid_argument("trajectory: action exceeds bound");
    if ((rec.collided[t] != 0) != rec.states[t + 1].in_collision)
      throw std::invalid_argument("trajectory: collided flag mismatch");
    if (rec.collided[t] && first < 0) first = static_cast<int>(t);
  }
  if (first != rec.first_collision)
    throw std::invalid_argument("trajectory: first_collision index mismatch");
  if (!rec.obs_seq.empty() && rec.obs_seq.size() != K + 1)
    throw std::invalid_argument("trajectory: observation sequence length mismatch");
}

std::optional<TrajectoryRecord> relabel_forward(const TrajectoryRecord& rec,
                                                const world::ArmModel& model,
                                                const world::RewardSchedule& schedule,
                                                double goal_radius) {
  (void)goal_radius;
  if (rec.outcome == TrajectoryRecord::Outcome::Success)
    throw std::invalid_argument("relabel_forward: input must be a failed trajectory");
  const int keep =
      rec.outcome == TrajectoryRecord::Outcome::Collision ? rec.first_collision : rec.length();
  if (keep < 2) return std::nullopt;

  const geom::Vec3 goal =
      world::forward_kinematics(model, rec.states[static_cast<size_t>(keep)].q).tip;

  TrajectoryRecord out;
  out.task = rec.task;
  out.task.goal0 = goal;
  out.task.goal_velocity = geom::Vec3::Zero();
  out.states.reserve(static_cast<size_t>(keep) + 1);
  for (int t = 0; t <= keep; ++t) {
    world::WorldState s = rec.states[static_cast<size_t>(t)];
    s.goal = goal;
    out.states.push_back(std::move(s));
  }
  out.actions.assign(rec.actions.begin(), rec.actions.begin() + keep);
  out.rewards.assign(static_cast<size_t>(keep), -schedule.step_penalty);
  out.collided.assign(static_cast<size_t>(keep), 0);
  out.outcome = TrajectoryRecord::Outcome::Success;
  out.first_collision = -1;
  out.ended_done = true;
  out.final_success = true;
  out.relabeled = true;
  return out;
}

double replay_deviation(const TrajectoryRecord& rec, const world::ArmModel& model) {
  double worst = 0.0;
  for (int t = 0; t < rec.length(); ++t) {
    const world::JointVec q = model.clamp_to_limits(
        rec.states[static_cast<size_t>(t)].q + model.clamp_action(rec.actions[static_cast<size_t>(t)]));
    worst = std::max(worst,
                     (q - rec.states[static_cast<size_t>(t) + 1].q).cwiseAbs().maxCoeff());
  }
  return worst;
}

std::optional<TrajectoryRecord> relabel_reverse(const TrajectoryRecord& rec,
                                                const world::ArmModel& model,
                                                const world::RewardSchedule& schedule,
                                                double goal_radius) {
  (void)goal_radius;
  if (!rec.relabeled || rec.first_collision >= 0)
    throw std::invalid_argument("relabel_reverse: input must be a collision-free relabeled record");
  const int K = rec.length();

  TrajectoryRecord out;
  out.task = rec.task;
  const geom::Vec3 goal = world::forward_kinematics(model, rec.states[0].q).tip;
  out.task.goal0 = goal;
  out.task.goal_velocity = geom::Vec3::Zero();
  out.states.reserve(static_cast<size_t>(K) + 1);
  for (int r = 0; r <= K; ++r) {
    world::WorldState s = rec.states[static_cast<size_t>(K - r)];
    s.goal = goal;
    s.step_index = r;
    out.states.push_back(std::move(s));
  }
  for (int r = 0; r < K; ++r) {
    out.actions.push_back(model.clamp_action(-rec.actions[static_cast<size_t>(K - 1 - r)]));
  }
  out.rewards.assign(static_cast<size_t>(K), -schedule.step_penalty);
  out.collided.assign(static_cast<size_t>(K), 0);
  out.outcome = TrajectoryRecord::Outcome::Success;
  out.first_collision = -1;
  out.ended_done = true;
  out.final_success = true;
  out.relabeled = true;
  out.reversed = true;

  if (replay_deviation(out, model) > 1e-9) return std::nullopt;
  return out;
}

// ---- buffer -----------------------------------------------------------------

StoreResult ReplayBuffer::store(TrajectoryRecord rec) {
  validate_trajectory(rec, model_);
  StoreResult res{total_, static_cast<size_t>(rec.length())};
  pool_.push_back({total_, std::make_shared<TrajectoryRecord>(std::move(rec))});
  total_ += res.count;
  while (total_ - dropped_ > cfg_.capacity && !pool_.empty()) {
    Entry& front = pool_.front();
    const size_t len = static_cast<size_t>(front.rec->length());
    const size_t remaining = front.start_abs + len - dropped_;
    const size_t excess = total_ - dropped_ - cfg_.capacity;
    if (excess >= remaining) {
      dropped_ += remaining;
      pool_.pop_front();
    } else {
      dropped_ += excess;
    }
  }
  return res;
}

StoreResult ReplayBuffer::store_relabeled(TrajectoryRecord rec) {
  validate_trajectory(rec, model_);
  if (!rec.relabeled) throw std::invalid_argument("store_relabeled: record not relabeled");
  std::lock_guard<std::mutex> lock(relabeled_mu_);
  StoreResult res{relabeled_total_, static_cast<size_t>(rec.length())};
  relabeled_.push_back({relabeled_total_, std::make_shared<TrajectoryRecord>(std::move(rec))});
  relabeled_total_ += res.count;
  while (relabeled_total_ - relabeled_dropped_ > cfg_.relabeled_capacity && !relabeled_.empty()) {
    Entry& front = relabeled_.front();
    const size_t len = static_cast<size_t>(front.rec->length());
    const size_t remaining = front.start_abs + len - relabeled_dropped_;
    const size_t excess = relabeled_total_ - relabeled_dropped_ - cfg_.relabeled_capacity;
    if (excess >= remaining) {
      relabeled_dropped_ += remaining;
      relabeled_.pop_front();
    } else {
      relabeled_dropped_ += excess;
    }
  }
  return res;
}

size_t ReplayBuffer::relabeled_size() const {
  std::lock_guard<std::mutex> lock(relabeled_mu_);
  return relabeled_total_ - relabeled_dropped_;
}

TransitionRef ReplayBuffer::pick(const std::deque<Entry>& pool, size_t dropped, size_t total,
                                 Rng& rng) {
  std::uniform_int_distribution<size_t> u(dropped, total - 1);
  const size_t r = u(rng);
  // first entry whose span ends beyond r
  auto it = std::upper_bound(pool.begin(), pool.end(), r, [](size_t value, const Entry& e) {
    return value < e.start_abs + static_cast<size_t>(e.rec->length());
  });
  const Entry& e = *it;
  return {e.rec, static_cast<int>(r - e.start_abs)};
}

std::optional<std::vector<TransitionRef>> ReplayBuffer::sample(Rng& rng, int batch) const {
  std::lock_guard<std::mutex> lock(relabeled_mu_);
  const size_t orig_live = total_ - dropped_;
  const size_t rel_live = relabeled_total_ - relabeled_dropped_;
  const double ratio = std::clamp(cfg_.relabel_ratio, 0.0, 1.0);
  if (orig_live == 0 && rel_live == 0) return std::nullopt;
  if (ratio >= 1.0 && rel_live == 0) return std::nullopt;
  if (ratio <= 0.0 && orig_live == 0) return std::nullopt;

  std::vector<TransitionRef> out;
  out.reserve(static_cast<size_t>(batch));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < batch; ++i) {
    bool from_relabeled = u(rng) < ratio;
    if (from_relabeled && rel_live == 0) from_relabeled = false;
    if (!from_relabeled && orig_live == 0) from_relabeled = true;
    out.push_back(from_relabeled ? pick(relabeled_, relabeled_dropped_, relabeled_total_, rng)
                                 : pick(pool_, dropped_, total_, rng));
  }
  return out;
}

// ---- persistence ------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'A', 'R', 'L', 'B'};
constexpr uint32_t kSnapshotVersion = 1;

void write_u64(std::ostream& os, uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); }

uint64_t read_u64(std::istream& is) {
  uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

void write_doubles(std::ostream& os, const double* p, size_t n) {
  os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void read_doubles(std::istream& is, double* p, size_t n) {
  is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

void write_record(std::ostream& os, const TrajectoryRecord& rec, size_t skip) {
  const std::string task = world::to_json(rec.task).dump();
  write_u64(os, task.size());
  os.write(task.data(), static_cast<std::streamsize>(task.size()));
  const size_t K = static_cast<size_t>(rec.length());
  const auto n = static_cast<size_t>(rec.states[0].q.size());
  write_u64(os, K - skip);
  write_u64(os, n);
  uint8_t flags[6] = {static_cast<uint8_t>(rec.outcome),
                      rec.ended_done,
                      rec.final_success,
                      rec.relabeled,
                      rec.reversed,
                      static_cast<uint8_t>(rec.materialized && !rec.obs_seq.empty())};
  os.write(reinterpret_cast<const char*>(flags), 6);
  int64_t first = -1;  // recomputed over the surviving suffix
  for (size_t t = skip; t < K; ++t) {
    if (rec.collided[t]) {
      first = static_cast<int64_t>(t - skip);
      break;
    }
  }
  os.write(reinterpret_cast<const char*>(&first), 8);
  for (size_t t = skip; t <= K; ++t) {
    const auto& s = rec.states[t];
    write_doubles(os, s.q.data(), n);
    write_doubles(os, s.goal.data(), 3);
    const int64_t idx = s.step_index;
    os.write(reinterpret_cast<const char*>(&idx), 8);
    const uint8_t coll = s.in_collision;
    os.write(reinterpret_cast<const char*>(&coll), 1);
  }
  for (size_t t = skip; t < K; ++t) {
    write_doubles(os, rec.actions[t].data(), n);
    write_doubles(os, &rec.rewards[t], 1);
    os.write(reinterpret_cast<const char*>(&rec.collided[t]), 1);
  }
}

TrajectoryRecord read_record(std::istream& is) {
  TrajectoryRecord rec;
  const size_t task_len = read_u64(is);
  std::string task(task_len, '\0');
  is.read(task.data(), static_cast<std::streamsize>(task_len));
  rec.task = world::task_from_json(nlohmann::json::parse(task));
  const size_t K = read_u64(is);
  const size_t n = read_u64(is);
  uint8_t flags[6];
  is.read(reinterpret_cast<char*>(flags), 6);
  rec.outcome = static_cast<TrajectoryRecord::Outcome>(flags[0]);
  rec.ended_done = flags[1];
  rec.final_success = flags[2];
  rec.relabeled = flags[3];
  rec.reversed = flags[4];
  const bool had_obs = flags[5];
  int64_t first = 0;
  is.read(reinterpret_cast<char*>(&first), 8);
  rec.first_collision = static_cast<int>(first);
  rec.states.resize(K + 1);
  for (auto& s : rec.states) {
    s.q.resize(static_cast<Eigen::Index>(n));
    read_doubles(is, s.q.data(), n);
    read_doubles(is, s.goal.data(), 3);
    int64_t idx = 0;
    is.read(reinterpret_cast<char*>(&idx), 8);
    s.step_index = static_cast<int>(idx);
    uint8_t coll = 0;
    is.read(reinterpret_cast<char*>(&coll), 1);
    s.in_collision = coll;
  }
  rec.actions.resize(K);
  rec.rewards.resize(K);
  rec.collided.resize(K);
  for (size_t t = 0; t < K; ++t) {
    rec.actions[t].resize(static_cast<Eigen::Index>(n));
    read_doubles(is, rec.actions[t].data(), n);
    read_doubles(is, &rec.rewards[t], 1);
    is.read(reinterpret_cast<char*>(&rec.collided[t]), 1);
  }
  rec.materialized = had_obs;  // resolved by the caller via re-rendering
  return rec;
}

}  // namespace

void ReplayBuffer::save(const std::filesystem::path& path) const {
  std::lock_guard<std::mutex> lock(relabeled_mu_);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("ReplayBuffer::save: cannot open " + path.string());
  os.write(kMagic, 4);
  const uint32_t version = kSnapshotVersion;
  os.write(reinterpret_cast<const char*>(&version), 4);
  nlohmann::json manifest;
  manifest["version"] = kSnapshotVersion;
  manifest["episodes"] = pool_.size();
  manifest["relabeled_episodes"] = relabeled_.size();
  manifest["transitions"] = total_ - dropped_;
  manifest["relabeled_transitions"] = relabeled_total_ - relabeled_dropped_;
  manifest["n_joints"] = model_.n_joints();
  const std::string text = manifest.dump();
  write_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));

  write_u64(os, pool_.size());
  for (const Entry& e : pool_) {
    const size_t skip = e.start_abs < dropped_ ? dropped_ - e.start_abs : 0;
    write_record(os, *e.rec, skip);
  }
  write_u64(os, relabeled_.size());
  for (const Entry& e : relabeled_) {
    const size_t skip = e.start_abs < relabeled_dropped_ ? relabeled_dropped_ - e.start_abs : 0;
    write_record(os, *e.rec, skip);
  }
}

void ReplayBuffer::load(const std::filesystem::path& path,
                        const std::vector<render::CameraView>& views, double goal_render_radius) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("ReplayBuffer::load: cannot open " + path.string());
  char magic[4];
  is.read(magic, 4);
  uint32_t version = 0;
  is.read(reinterpret_cast<char*>(&version), 4);
  if (std::memcmp(magic, kMagic, 4) != 0 || version != kSnapshotVersion)
    throw std::runtime_error("ReplayBuffer::load: bad magic or version");
  const size_t manifest_len = read_u64(is);
  std::string manifest(manifest_len, '\0');
  is.read(manifest.data(), static_cast<std::streamsize>(manifest_len));
  nlohmann::json::parse(manifest);  // validated parse

  std::lock_guard<std::mutex> lock(relabeled_mu_);
  pool_.clear();
  relabeled_.clear();
  total_ = dropped_ = relabeled_total_ = relabeled_dropped_ = 0;
  const size_t n_pool = read_u64(is);
  for (size_t i = 0; i < n_pool; ++i) {
    TrajectoryRecord rec = read_record(is);
    if (rec.materialized && !views.empty()) rec = re_render(std::move(rec), model_, views, goal_render_radius);
    pool_.push_back({total_, std::make_shared<TrajectoryRecord>(std::move(rec))});
    total_ += static_cast<size_t>(pool_.back().rec->length());
  }
  const size_t n_rel = read_u64(is);
  for (size_t i = 0; i < n_rel; ++i) {
    TrajectoryRecord rec = read_record(is);
    if (rec.materialized && !views.empty()) rec = re_render(std::move(rec), model_, views, goal_render_radius);
    relabeled_.push_back({relabeled_total_, std::make_shared<TrajectoryRecord>(std::move(rec))});
    relabeled_total_ += static_cast<size_t>(relabeled_.back().rec->length());
  }
}

// ---- re-rendering -------------------------------------------------------------

TrajectoryRecord re_render(TrajectoryRecord rec, const world::ArmModel& model,
                           const std::vector<render::CameraView>& views,
                           double goal_render_radius) {
  rec.obs_seq.clear();
  rec.obs_seq.reserve(rec.states.size());
  for (const auto& s : rec.states) {
    rec.obs_seq.push_back(render::render_all(s, rec.task.obstacles, model, views, goal_render_radius));
  }
  rec.materialized = true;
  return rec;
}

bool RerenderWorker::enqueue(TrajectoryRecord rec) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (stopping_) return false;
    if (queue_.size() >= depth_) {
      dropped_.fetch_add(1);
      return false;
    }
    queue_.push_back(std::move(rec));
  }
  cv_.notify_one();
  return true;
}

void RerenderWorker::flush() {
  std::unique_lock<std::mutex> lock(mu_);
  idle_cv_.wait(lock, [this] { return queue_.empty() && in_flight_ == 0; });
}

void RerenderWorker::stop() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  if (thread_.joinable()) thread_.join();
}

void RerenderWorker::run() {
  for (;;) {
    TrajectoryRecord rec;
    {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;  // stopping
      rec = std::move(queue_.front());
      queue_.pop_front();
      ++in_flight_;
    }
    TrajectoryRecord done = re_render(std::move(rec), model_, views_, radius_);
    buffer_.store_relabeled(std::move(done));
    {
      std::lock_guard<std::mutex> lock(mu_);
      --in_flight_;
    }
    idle_cv_.notify_all();
  }
}

}  // namespace armrl::replay
