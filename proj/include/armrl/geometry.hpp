#pragma once

#include <Eigen/Core>

#include <functional>
#include <optional>

namespace armrl::geom {

using Vec3 = Eigen::Vector3d;

struct Segment {
  Vec3 a;
  Vec3 b;
};

struct Sphere {
  Vec3 center;
  double radius = 0.0;
};

// Axis-aligned box given by center and half-extents.
struct Aabb {
  Vec3 center;
  Vec3 half;

  Vec3 lo() const { return center - half; }
  Vec3 hi() const { return center + half; }
  bool contains(const Vec3& p) const {
    return ((p - center).cwiseAbs().array() <= half.array()).all();
  }
};

double point_segment_distance(const Vec3& p, const Segment& s);

// Signed distance of a point to the box surface; negative inside.
double point_aabb_signed_distance(const Vec3& p, const Aabb& box);

// Signed distance between a segment (its axis) and a shape surface:
// min over the segment of the point signed distance. Negative values
// measure how deep the axis penetrates the shape.
double segment_sphere_signed_distance(const Segment& s, const Sphere& sph);
double segment_aabb_signed_distance(const Segment& s, const Aabb& box);

// Entry distance of the ray origin + t*dir (dir unit length) into a
// primitive, smallest t >= 0, or nullopt if the ray misses.
std::optional<double> ray_sphere_entry(const Vec3& origin, const Vec3& dir, const Sphere& sph);
std::optional<double> ray_aabb_entry(const Vec3& origin, const Vec3& dir, const Aabb& box);
std::optional<double> ray_capsule_entry(const Vec3& origin, const Vec3& dir, const Segment& seg,
                                        double radius);

// Minimizes a convex function on [lo, hi] by golden-section search.
// Returns the argmin; the bracket collapses below 1e-13 * (hi - lo).
double minimize_convex(const std::function<double(double)>& f, double lo, double hi);

}  // namespace armrl::geom
