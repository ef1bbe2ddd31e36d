#include "armrl/serialize.hpp"

namespace armrl::world {

namespace {

nlohmann::ordered_json vec3_json(const Vec3& v) {
  return nlohmann::ordered_json::array({v[0], v[1], v[2]});
}

Vec3 vec3_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw std::invalid_argument("expected 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

JointVec joints_from(const nlohmann::json& j) {
  JointVec q(j.size());
  for (size_t i = 0; i < j.size(); ++i) q[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return q;
}

void check_version(const nlohmann::json& j, const char* what) {
  if (!j.contains("version") || j["version"].get<int>() != kRecordVersion)
    throw std::invalid_argument(std::string(what) + ": unsupported record version");
}

}  // namespace

nlohmann::ordered_json to_json(const TaskSpec& task) {
  nlohmann::ordered_json j;
  j["version"] = kRecordVersion;
  j["obstacles"] = nlohmann::ordered_json::array();
  for (const Obstacle& ob : task.obstacles) {
    nlohmann::ordered_json o;
    o["kind"] = ob.kind == Obstacle::Kind::Sphere ? "sphere" : "box";
    o["center_m"] = vec3_json(ob.center);
    o["dims_m"] = vec3_json(ob.dims);
    j["obstacles"].push_back(o);
  }
  j["goal0_m"] = vec3_json(task.goal0);
  j["goal_velocity_mps"] = vec3_json(task.goal_velocity);
  j["start_q_rad"] = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < task.start_q.size(); ++i) j["start_q_rad"].push_back(task.start_q[i]);
  return j;
}

TaskSpec task_from_json(const nlohmann::json& j) {
  check_version(j, "TaskSpec");
  TaskSpec task;
  for (const auto& o : j.at("obstacles")) {
    Obstacle ob;
    const std::string kind = o.at("kind").get<std::string>();
    if (kind == "sphere") {
      ob.kind = Obstacle::Kind::Sphere;
    } else if (kind == "box") {
      ob.kind = Obstacle::Kind::Box;
    } else {
      throw std::invalid_argument("TaskSpec: unknown obstacle kind " + kind);
    }
    ob.center = vec3_from(o.at("center_m"));
    ob.dims = vec3_from(o.at("dims_m"));
    task.obstacles.push_back(ob);
  }
  task.goal0 = vec3_from(j.at("goal0_m"));
  task.goal_velocity = vec3_from(j.at("goal_velocity_mps"));
  task.start_q = joints_from(j.at("start_q_rad"));
  return task;
}

nlohmann::ordered_json to_json(const WorldState& state) {
  nlohmann::ordered_json j;
  j["version"] = kRecordVersion;
  j["q_rad"] = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < state.q.size(); ++i) j["q_rad"].push_back(state.q[i]);
  j["goal_m"] = vec3_json(state.goal);
  j["step_index"] = state.step_index;
  j["in_collision"] = state.in_collision;
  return j;
}

WorldState state_from_json(const nlohmann::json& j) {
  check_version(j, "WorldState");
  WorldState s;
  s.q = joints_from(j.at("q_rad"));
  s.goal = vec3_from(j.at("goal_m"));
  s.step_index = j.at("step_index").get<int>();
  s.in_collision = j.at("in_collision").get<bool>();
  return s;
}

}  // namespace armrl::world
