#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "armrl/world.hpp"

namespace armrl::render {

enum class ViewAxis { PosX, NegX, PosY, NegY, PosZ, NegZ };

// Orthographic axis-aligned camera. Rays start on the plane
// axis = plane_coord and travel along the (signed) view axis; the image
// spans [extent_lo, extent_hi] in the two remaining world coordinates.
struct CameraView {
  ViewAxis axis = ViewAxis::NegZ;
  Eigen::Vector2d extent_lo{0.0, 0.0};
  Eigen::Vector2d extent_hi{1.0, 1.0};
  int height = 48;
  int width = 48;
  double plane_coord = 0.0;
  double far_value = 1.0;
  std::string name = "view";
};

// Per-view raster: normalized depth plus one binary mask per semantic
// class. depth == 1 wherever no mask is set.
struct ObservationImage {
  Eigen::MatrixXf depth;
  Eigen::MatrixXf arm_mask;
  Eigen::MatrixXf obstacle_mask;
  Eigen::MatrixXf goal_mask;

  static constexpr int kChannels = 4;
  const Eigen::MatrixXf& channel(int i) const {
    switch (i) {
      case 0: return depth;
      case 1: return arm_mask;
      case 2: return obstacle_mask;
      default: return goal_mask;
    }
  }
  static const char* channel_name(int i) {
    constexpr const char* names[kChannels] = {"depth", "arm", "obstacle", "goal"};
    return names[i];
  }
};

// Scene primitive in renderer order: arm capsules by link index, then
// obstacles by index, then the goal sphere. Ties go to the earlier entry.
struct Primitive {
  enum class Class { Arm, Obstacle, Goal };
  Class cls = Class::Arm;
  bool is_capsule = false;
  bool is_box = false;
  geom::Segment segment{};   // capsules
  double radius = 0.0;       // capsules and spheres
  geom::Vec3 center = geom::Vec3::Zero();  // spheres
  geom::Vec3 half = geom::Vec3::Zero();    // boxes
};

std::vector<Primitive> scene_primitives(const world::WorldState& state,
                                        const std::vector<world::Obstacle>& obstacles,
                                        const world::ArmModel& model, double goal_render_radius);

ObservationImage render_primitives(const std::vector<Primitive>& prims, const CameraView& view);

ObservationImage render_view(const world::WorldState& state,
                             const std::vector<world::Obstacle>& obstacles,
                             const world::ArmModel& model, const CameraView& view,
                             double goal_render_radius = 0.02);

std::vector<ObservationImage> render_all(const world::WorldState& state,
                                         const std::vector<world::Obstacle>& obstacles,
                                         const world::ArmModel& model,
                                         const std::vector<CameraView>& views,
                                         double goal_render_radius = 0.02);

// Top (-z), front (-x), side (-y) cameras covering the workspace box,
// the obstacle region and the arm base, in that fixed order.
std::vector<CameraView> default_views(int count = 3, int resolution = 48);

}  // namespace armrl::render
