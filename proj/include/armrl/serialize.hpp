#pragma once

#include <json.hpp>

#include "armrl/world.hpp"

namespace armrl::world {

// Versioned records; field order and units match schemas/task_spec.v1.json
// and schemas/world_state.v1.json.
inline constexpr int kRecordVersion = 1;

nlohmann::ordered_json to_json(const TaskSpec& task);
TaskSpec task_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const WorldState& state);
WorldState state_from_json(const nlohmann::json& j);

}  // namespace armrl::world
