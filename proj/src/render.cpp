#include "armrl/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace armrl::render {

namespace {

int axis_index(ViewAxis a) {
  switch (a) {
    case ViewAxis::PosX:
    case ViewAxis::NegX: return 0;
    case ViewAxis::PosY:
    case ViewAxis::NegY: return 1;
    default: return 2;
  }
}

double axis_sign(ViewAxis a) {
  return (a == ViewAxis::PosX || a == ViewAxis::PosY || a == ViewAxis::PosZ) ? 1.0 : -1.0;
}

// In-plane world coordinate indices (u, v) for each axis.
std::pair<int, int> plane_dims(ViewAxis a) {
  switch (axis_index(a)) {
    case 0: return {1, 2};  // looking along x: image spans (y, z)
    case 1: return {0, 2};  // along y: (x, z)
    default: return {0, 1};  // along z: (x, y)
  }
}

struct Bounds2d {
  double lo0, hi0, lo1, hi1;
};

Bounds2d primitive_bounds(const Primitive& p, int d0, int d1) {
  if (p.is_capsule) {
    return {std::min(p.segment.a[d0], p.segment.b[d0]) - p.radius,
            std::max(p.segment.a[d0], p.segment.b[d0]) + p.radius,
            std::min(p.segment.a[d1], p.segment.b[d1]) - p.radius,
            std::max(p.segment.a[d1], p.segment.b[d1]) + p.radius};
  }
  if (p.is_box) {
    return {p.center[d0] - p.half[d0], p.center[d0] + p.half[d0], p.center[d1] - p.half[d1],
            p.center[d1] + p.half[d1]};
  }
  return {p.center[d0] - p.radius, p.center[d0] + p.radius, p.center[d1] - p.radius,
          p.center[d1] + p.radius};
}

}  // namespace

std::vector<Primitive> scene_primitives(const world::WorldState& state,
                                        const std::vector<world::Obstacle>& obstacles,
                                        const world::ArmModel& model, double goal_render_radius) {
  std::vector<Primitive> prims;
  const world::ForwardKin fk = world::forward_kinematics(model, state.q);
  for (size_t i = 0; i < fk.segments.size(); ++i) {
    Primitive p;
    p.cls = Primitive::Class::Arm;
    p.is_capsule = true;
    p.segment = fk.segments[i];
    p.radius = model.link_radius[i];
    prims.push_back(p);
  }
  for (const auto& ob : obstacles) {
    Primitive p;
    p.cls = Primitive::Class::Obstacle;
    if (ob.kind == world::Obstacle::Kind::Box) {
      p.is_box = true;
      p.center = ob.center;
      p.half = ob.dims;
    } else {
      p.center = ob.center;
      p.radius = ob.dims[0];
    }
    prims.push_back(p);
  }
  if (goal_render_radius > 0.0) {
    Primitive p;
    p.cls = Primitive::Class::Goal;
    p.center = state.goal;
    p.radius = goal_render_radius;
    prims.push_back(p);
  }
  return prims;
}

ObservationImage render_primitives(const std::vector<Primitive>& prims, const CameraView& view) {
  const int H = view.height;
  const int W = view.width;
  const int ax = axis_index(view.axis);
  const auto [d0, d1] = plane_dims(view.axis);
  const double sign = axis_sign(view.axis);
  const double du = (view.extent_hi[0] - view.extent_lo[0]) / W;
  const double dv = (view.extent_hi[1] - view.extent_lo[1]) / H;

  Eigen::MatrixXd best_t = Eigen::MatrixXd::Constant(H, W, std::numeric_limits<double>::infinity());
  Eigen::Matrix<int8_t, Eigen::Dynamic, Eigen::Dynamic> cls =
      Eigen::Matrix<int8_t, Eigen::Dynamic, Eigen::Dynamic>::Constant(H, W, int8_t{-1});

  geom::Vec3 dir = geom::Vec3::Zero();
  dir[ax] = sign;

  for (const Primitive& p : prims) {
    const Bounds2d bb = primitive_bounds(p, d0, d1);
    // pixel index range whose centers fall inside the bounding rect
    const int c0 = std::max(0, static_cast<int>(std::floor((bb.lo0 - view.extent_lo[0]) / du - 0.5)));
    const int c1 = std::min(W - 1, static_cast<int>(std::ceil((bb.hi0 - view.extent_lo[0]) / du)));
    const int r0 = std::max(0, static_cast<int>(std::floor((bb.lo1 - view.extent_lo[1]) / dv - 0.5)));
    const int r1 = std::min(H - 1, static_cast<int>(std::ceil((bb.hi1 - view.extent_lo[1]) / dv)));
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        geom::Vec3 origin = geom::Vec3::Zero();
        origin[ax] = view.plane_coord;
        origin[d0] = view.extent_lo[0] + (c + 0.5) * du;
        origin[d1] = view.extent_lo[1] + (r + 0.5) * dv;
        std::optional<double> t;
        if (p.is_capsule) {
          t = geom::ray_capsule_entry(origin, dir, p.segment, p.radius);
        } else if (p.is_box) {
          t = geom::ray_aabb_entry(origin, dir, {p.center, p.half});
        } else {
          t = geom::ray_sphere_entry(origin, dir, {p.center, p.radius});
        }
        if (t && *t <= view.far_value && *t < best_t(r, c)) {
          best_t(r, c) = *t;
          cls(r, c) = static_cast<int8_t>(p.cls);
        }
      }
    }
  }

  ObservationImage img;
  img.depth = Eigen::MatrixXf::Ones(H, W);
  img.arm_mask = Eigen::MatrixXf::Zero(H, W);
  img.obstacle_mask = Eigen::MatrixXf::Zero(H, W);
  img.goal_mask = Eigen::MatrixXf::Zero(H, W);
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      if (cls(r, c) < 0) continue;
      img.depth(r, c) = static_cast<float>(best_t(r, c) / view.far_value);
      switch (static_cast<Primitive::Class>(cls(r, c))) {
        case Primitive::Class::Arm: img.arm_mask(r, c) = 1.0f; break;
        case Primitive::Class::Obstacle: img.obstacle_mask(r, c) = 1.0f; break;
        case Primitive::Class::Goal: img.goal_mask(r, c) = 1.0f; break;
      }
    }
  }
  return img;
}

ObservationImage render_view(const world::WorldState& state,
                             const std::vector<world::Obstacle>& obstacles,
                             const world::ArmModel& model, const CameraView& view,
                             double goal_render_radius) {
  return render_primitives(scene_primitives(state, obstacles, model, goal_render_radius), view);
}

std::vector<ObservationImage> render_all(const world::WorldState& state,
                                         const std::vector<world::Obstacle>& obstacles,
                                         const world::ArmModel& model,
                                         const std::vector<CameraView>& views,
                                         double goal_render_radius) {
  const std::vector<Primitive> prims =
      scene_primitives(state, obstacles, model, goal_render_radius);
  std::vector<ObservationImage> out;
  out.reserve(views.size());
  for (const CameraView& v : views) out.push_back(render_primitives(prims, v));
  return out;
}

std::vector<CameraView> default_views(int count, int resolution) {
  // scene bounds: workspace/obstacle boxes plus the arm base
  const Eigen::Vector3d lo(-0.10, -0.45, -0.05);
  const Eigen::Vector3d hi(0.85, 0.45, 0.55);
  std::vector<CameraView> views;
  auto make = [&](ViewAxis axis, const char* name) {
    CameraView v;
    v.axis = axis;
    const auto [d0, d1] = plane_dims(axis);
    v.extent_lo = {lo[d0], lo[d1]};
    v.extent_hi = {hi[d0], hi[d1]};
    v.height = resolution;
    v.width = resolution;
    v.plane_coord = axis_sign(axis) > 0 ? lo[axis_index(axis)] - 0.05 : hi[axis_index(axis)] + 0.05;
    v.far_value = 1.0;
    v.name = name;
    return v;
  };
  views.push_back(make(ViewAxis::NegZ, "top"));
  if (count >= 2) views.push_back(make(ViewAxis::NegX, "front"));
  if (count >= 3) views.push_back(make(ViewAxis::NegY, "side"));
  if (count >= 4) views.push_back(make(ViewAxis::PosY, "side2"));
  if (count < 1 || count > 4) throw std::invalid_argument("default_views: count must be 1..4");
  return views;
}

}  // namespace armrl::render
