#include "armrl/eval/evaluate.hpp"

#include <atomic>
#include <chrono>
#include <sstream>
#include <thread>

namespace armrl::eval {

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

void IkInterpPolicy::reset(const world::TaskSpec& task) {
  warm_start_ = task.start_q;
  last_failed_ = false;
}

world::JointVec IkInterpPolicy::act(const world::WorldState& state) {
  auto q_ik = dls_ik(model_, state.goal, warm_start_, opts_);
  if (!q_ik) q_ik = dls_ik(model_, state.goal, state.q, opts_);
  if (!q_ik) {
    last_failed_ = true;
    return world::JointVec::Zero(model_.n_joints());
  }
  warm_start_ = *q_ik;
  return model_.clamp_action(*q_ik - state.q);
}

void RandomPolicy::reset(const world::TaskSpec&) {
  rng_.seed(mix_seed(seed_, static_cast<uint64_t>(episode_++)));
}

world::JointVec RandomPolicy::act(const world::WorldState&) {
  std::uniform_real_distribution<double> u(-model_.max_joint_step, model_.max_joint_step);
  world::JointVec a(model_.n_joints());
  for (int i = 0; i < model_.n_joints(); ++i) a[i] = u(rng_);
  return a;
}

std::vector<world::TaskSpec> make_task_set(const world::ArmModel& model,
                                           const world::WorldConfig& cfg,
                                           const TaskSetOptions& opts) {
  world::WorldConfig c = cfg;
  if (!opts.with_obstacles) c.obstacle_count = 0;
  std::vector<world::TaskSpec> tasks;
  tasks.reserve(static_cast<size_t>(opts.count));
  for (int i = 0; i < opts.count; ++i) {
    for (uint64_t attempt = 0;; ++attempt) {
      world::Rng rng(mix_seed(opts.seed, static_cast<uint64_t>(i) * 1000 + attempt));
      try {
        world::TaskSpec task = world::sample_task(rng, model, c);
        if (opts.goal_speed > 0.0) world::set_goal_velocity(task, rng, opts.goal_speed);
        tasks.push_back(std::move(task));
        break;
      } catch (const world::SamplingFailure&) {
        if (attempt > 20) throw;
      }
    }
  }
  return tasks;
}

double path_length(const world::ArmModel& model, const std::vector<world::JointVec>& qs) {
  double total = 0.0;
  for (size_t i = 0; i + 1 < qs.size(); ++i) {
    total += (world::forward_kinematics(model, qs[i + 1]).tip -
              world::forward_kinematics(model, qs[i]).tip)
                 .norm();
  }
  return total;
}

namespace {

struct EpisodeRun {
  bool success = false;
  bool collided = false;
  int steps = 0;
  double path_len = 0.0;
  double latency_s = 0.0;
};

EpisodeRun run_episode(Policy& policy, const world::TaskSpec& task, const world::ArmModel& model,
                       const world::WorldConfig& cfg, const world::RewardSchedule& schedule,
                       bool variable_speed, world::Rng& rng) {
  world::Env env(model, cfg, schedule);
  env.variable_speed = variable_speed;
  env.reset(task);
  policy.reset(task);
  EpisodeRun run;
  std::vector<world::JointVec> qs{task.start_q};
  double latency = 0.0;
  for (int t = 0; t < schedule.max_steps; ++t) {
    const auto t0 = std::chrono::steady_clock::now();
    const world::JointVec a = policy.act(env.state());
    latency += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const world::StepOutcome out = env.step(a, 1.0, rng);
    qs.push_back(out.next_state.q);
    run.collided = run.collided || out.collided;
    ++run.steps;
    if (out.done) {
      run.success = out.success;
      break;
    }
  }
  run.path_len = path_length(model, qs);
  run.latency_s = run.steps > 0 ? latency / run.steps : 0.0;
  return run;
}

}  // namespace

EvalReport evaluate_policy(Policy& policy, const std::vector<world::TaskSpec>& tasks,
                           const world::ArmModel& model, const world::WorldConfig& cfg,
                           const world::RewardSchedule& schedule, const EvalOptions& opts) {
  EvalReport report;
  report.tasks.resize(tasks.size());

  // Episodes run sequentially over the shared policy; the baselines are
  // stateless per task and parallelize across worker threads.
  std::vector<double> baseline(tasks.size(), -1.0);
  {
    std::atomic<size_t> next{0};
    const int n_threads = std::max(1, opts.threads);
    auto worker = [&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        if (opts.obstacle_mode) {
          world::Rng rng(mix_seed(opts.seed, 0xb000 + i));
          RrtOptions ro = opts.rrt;
          ro.goal_radius = cfg.goal_radius;
          ro.collision_threshold = cfg.collision_threshold;
          const auto path = rrt_plan(model, tasks[i].start_q, tasks[i].goal0,
                                     tasks[i].obstacles, rng, ro);
          if (path) baseline[i] = joint_path_tip_length(model, *path);
        } else {
          IkInterpPolicy ik(model);
          world::Rng rng(mix_seed(opts.seed, i));
          const EpisodeRun run =
              run_episode(ik, tasks[i], model, cfg, schedule, opts.variable_speed, rng);
          if (run.success) baseline[i] = run.path_len;
        }
      }
    };
    std::vector<std::thread> threads;
    for (int k = 0; k < n_threads; ++k) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }

  for (size_t i = 0; i < tasks.size(); ++i) {
    world::Rng rng(mix_seed(opts.seed, i));  // same goal dynamics as the baseline
    const EpisodeRun run =
        run_episode(policy, tasks[i], model, cfg, schedule, opts.variable_speed, rng);
    TaskResult& res = report.tasks[i];
    res.task_id = static_cast<int>(i);
    res.collided = run.collided;
    res.success = run.success && !(opts.obstacle_mode && run.collided);
    res.steps = run.steps;
    res.path_len = run.path_len;
    res.latency_s = run.latency_s;
    res.baseline_len = baseline[i];
    if (res.success && baseline[i] > 1e-9) {
      res.ratio = res.path_len / baseline[i];
      res.ratio_valid = true;
    }
  }

  double ratio_sum = 0.0, latency_sum = 0.0, steps_sum = 0.0;
  int successes = 0, collisions = 0;
  for (const TaskResult& r : report.tasks) {
    successes += r.success;
    collisions += r.collided;
    latency_sum += r.latency_s;
    steps_sum += r.steps;
    if (r.ratio_valid) {
      ratio_sum += r.ratio;
      ++report.ratio_count;
    }
  }
  const double n = std::max<size_t>(1, report.tasks.size());
  report.success_rate = successes / n;
  report.collision_rate = collisions / n;
  report.mean_ratio = report.ratio_count > 0 ? ratio_sum / report.ratio_count : 0.0;
  report.mean_latency_s = latency_sum / n;
  report.mean_steps = steps_sum / n;
  return report;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["success_rate"] = report.success_rate;
  j["collision_rate"] = report.collision_rate;
  j["mean_path_length_ratio"] = report.mean_ratio;
  j["ratio_count"] = report.ratio_count;
  j["mean_inference_latency_s"] = report.mean_latency_s;
  j["mean_steps"] = report.mean_steps;
  j["tasks"] = nlohmann::ordered_json::array();
  for (const TaskResult& r : report.tasks) {
    nlohmann::ordered_json t;
    t["task_id"] = r.task_id;
    t["success"] = r.success;
    t["collided"] = r.collided;
    t["steps"] = r.steps;
    t["path_len_m"] = r.path_len;
    t["baseline_len_m"] = r.baseline_len;
    t["ratio"] = r.ratio_valid ? r.ratio : nan("");
    t["latency_s"] = r.latency_s;
    j["tasks"].push_back(std::move(t));
  }
  return j;
}

std::string report_to_csv(const EvalReport& report) {
  std::ostringstream os;
  os << "task_id,success,collided,steps,path_len_m,baseline_len_m,ratio,latency_s\n";
  for (const TaskResult& r : report.tasks) {
    os << r.task_id << ',' << r.success << ',' << r.collided << ',' << r.steps << ','
       << r.path_len << ',' << r.baseline_len << ',';
    if (r.ratio_valid) os << r.ratio;
    os << ',' << r.latency_s << '\n';
  }
  return os.str();
}

std::string format_report_table(const std::string& label, const EvalReport& report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%-28s %8s %12s %16s %10s\n", "policy", "success",
                "avg ratio", "avg latency (s)", "tasks");
  os << line;
  std::snprintf(line, sizeof(line), "%-28s %8.3f %12.4f %16.3e %10zu\n", label.c_str(),
                report.success_rate, report.mean_ratio, report.mean_latency_s,
                report.tasks.size());
  os << line;
  return os.str();
}

}  // namespace armrl::eval
