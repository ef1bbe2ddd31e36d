#include "armrl/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace armrl::geom {

namespace {
constexpr double kParallelEps = 1e-14;
}

double point_segment_distance(const Vec3& p, const Segment& s) {
  const Vec3 e = s.b - s.a;
  const double len2 = e.squaredNorm();
  if (len2 < kParallelEps) return (p - s.a).norm();
  const double t = std::clamp((p - s.a).dot(e) / len2, 0.0, 1.0);
  return (p - (s.a + t * e)).norm();
}

double point_aabb_signed_distance(const Vec3& p, const Aabb& box) {
  const Vec3 q = (p - box.center).cwiseAbs() - box.half;
  const double outside = q.cwiseMax(0.0).norm();
  const double inside = std::min(q.maxCoeff(), 0.0);
  return outside + inside;
}

double minimize_convex(const std::function<double(double)>& f, double lo, double hi) {
  static const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 120 && (b - a) > 1e-13 * (hi - lo); ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double segment_sphere_signed_distance(const Segment& s, const Sphere& sph) {
  return point_segment_distance(sph.center, s) - sph.radius;
}

double segment_aabb_signed_distance(const Segment& s, const Aabb& box) {
  const Vec3 e = s.b - s.a;

  // Clip the segment against the box slabs.
  double t0 = 0.0, t1 = 1.0;
  bool separated = false;
  for (int i = 0; i < 3 && !separated; ++i) {
    const double lo = box.center[i] - box.half[i];
    const double hi = box.center[i] + box.half[i];
    if (std::abs(e[i]) < kParallelEps) {
      if (s.a[i] < lo || s.a[i] > hi) separated = true;
    } else {
      double ta = (lo - s.a[i]) / e[i];
      double tb = (hi - s.a[i]) / e[i];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) separated = true;
    }
  }

  if (!separated) {
    // Axis passes through the box: deepest penetration of the clipped part.
    auto depth = [&](double t) {
      const Vec3 p = s.a + t * e;
      return ((p - box.center).cwiseAbs() - box.half).maxCoeff();
    };
    const double t = minimize_convex(depth, t0, t1);
    return std::min({depth(t), depth(t0), depth(t1)});
  }

  auto dist = [&](double t) { return point_aabb_signed_distance(s.a + t * e, box); };
  const double t = minimize_convex(dist, 0.0, 1.0);
  return std::min({dist(t), dist(0.0), dist(1.0)});
}

std::optional<double> ray_sphere_entry(const Vec3& origin, const Vec3& dir, const Sphere& sph) {
  const Vec3 m = origin - sph.center;
  const double c = m.squaredNorm() - sph.radius * sph.radius;
  if (c <= 0.0) return 0.0;  // origin inside
  const double b = m.dot(dir);
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double t = -b - std::sqrt(disc);
  if (t < 0.0) return std::nullopt;
  return t;
}

std::optional<double> ray_aabb_entry(const Vec3& origin, const Vec3& dir, const Aabb& box) {
  double tmin = 0.0;
  double tmax = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i) {
    const double lo = box.center[i] - box.half[i];
    const double hi = box.center[i] + box.half[i];
    if (std::abs(dir[i]) < kParallelEps) {
      if (origin[i] < lo || origin[i] > hi) return std::nullopt;
    } else {
      double ta = (lo - origin[i]) / dir[i];
      double tb = (hi - origin[i]) / dir[i];
      if (ta > tb) std::swap(ta, tb);
      tmin = std::max(tmin, ta);
      tmax = std::min(tmax, tb);
      if (tmin > tmax) return std::nullopt;
    }
  }
  return tmin;
}

std::optional<double> ray_capsule_entry(const Vec3& origin, const Vec3& dir, const Segment& seg,
                                        double radius) {
  if (point_segment_distance(origin, seg) <= radius) return 0.0;

  std::optional<double> best;
  auto consider = [&](double t) {
    if (t >= 0.0 && (!best || t < *best)) best = t;
  };

  const Vec3 axis = seg.b - seg.a;
  const double len = axis.norm();
  if (len > kParallelEps) {
    const Vec3 u = axis / len;
    const Vec3 m = origin - seg.a;
    const Vec3 dp = dir - dir.dot(u) * u;
    const Vec3 mp = m - m.dot(u) * u;
    const double A = dp.squaredNorm();
    if (A > kParallelEps) {
      const double B = mp.dot(dp);
      const double C = mp.squaredNorm() - radius * radius;
      const double disc = B * B - A * C;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        for (const double t : {(-B - sq) / A, (-B + sq) / A}) {
          const double sax = (m + t * dir).dot(u);
          if (sax >= 0.0 && sax <= len) consider(t);
        }
      }
    }
  }
  for (const Vec3& cap : {seg.a, seg.b}) {
    if (auto t = ray_sphere_entry(origin, dir, {cap, radius})) consider(*t);
  }
  return best;
}

}  // namespace armrl::geom
