#pragma once

// Low-level intersection kernels shared by the BVH traversal and by the
// brute-force reference paths in the tests. Every predicate treats touching
// as intersecting.

#include "graspcov/core/types.hpp"

#include <array>
#include <cmath>
#include <optional>

namespace graspcov::detail {

// Barycentric slack so that rays through a shared edge hit at least one of the
// adjacent triangles.
inline constexpr double kBarycentricSlack = 1e-10;

// Moller-Trumbore. Returns the ray parameter of the hit if it lies in
// [t_min, t_max]. Rays parallel to the triangle plane never hit.
inline std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                          const Vec3& b, const Vec3& c, double t_min,
                                          double t_max) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = dir.cross(e2);
  const double det = e1.dot(p);
  const double scale = e1.norm() * e2.norm();
  if (std::abs(det) <= 1e-14 * scale) return std::nullopt;
  const double inv_det = 1.0 / det;
  const Vec3 s = origin - a;
  const double u = s.dot(p) * inv_det;
  if (u < -kBarycentricSlack || u > 1.0 + kBarycentricSlack) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = dir.dot(q) * inv_det;
  if (v < -kBarycentricSlack || u + v > 1.0 + kBarycentricSlack) return std::nullopt;
  const double t = e2.dot(q) * inv_det;
  if (t < t_min || t > t_max) return std::nullopt;
  return t;
}

// Slab test against an AABB. Returns the entry/exit interval clipped to
// [t_min, t_max] or nullopt if empty. `inv_dir` may contain infinities.
inline std::optional<std::array<double, 2>> ray_aabb(const Vec3& origin, const Vec3& inv_dir,
                                                     const Aabb& box, double t_min, double t_max) {
  for (int i = 0; i < 3; ++i) {
    double t0 = (box.min[i] - origin[i]) * inv_dir[i];
    double t1 = (box.max[i] - origin[i]) * inv_dir[i];
    if (std::isnan(t0) || std::isnan(t1)) {
      // Ray parallel to and lying in the slab plane: 0 * inf.
      if (origin[i] < box.min[i] || origin[i] > box.max[i]) return std::nullopt;
      continue;
    }
    if (t0 > t1) std::swap(t0, t1);
    t_min = std::max(t_min, t0);
    t_max = std::min(t_max, t1);
    if (t_min > t_max) return std::nullopt;
  }
  return std::array<double, 2>{t_min, t_max};
}

// Separating-axis test between a triangle and an axis-aligned box centred at
// the origin with half extents `h`. Vertices must already be in box frame.
inline bool triangle_box_local(const Vec3& v0, const Vec3& v1, const Vec3& v2, const Vec3& h) {
  // Box face normals.
  for (int i = 0; i < 3; ++i) {
    const double lo = std::min({v0[i], v1[i], v2[i]});
    const double hi = std::max({v0[i], v1[i], v2[i]});
    if (lo > h[i] || hi < -h[i]) return false;
  }

  const std::array<Vec3, 3> edges = {v1 - v0, v2 - v1, v0 - v2};
  const std::array<const Vec3*, 3> verts = {&v0, &v1, &v2};

  // Triangle normal.
  const Vec3 n = edges[0].cross(edges[1]);
  {
    const double d = n.dot(v0);
    const double r = h.dot(n.cwiseAbs());
    if (d > r || d < -r) return false;
  }

  // Nine edge cross products.
  for (int i = 0; i < 3; ++i) {
    for (const Vec3& e : edges) {
      Vec3 axis = Vec3::Zero();
      axis[i] = 1.0;
      axis = axis.cross(e);
      if (axis.squaredNorm() < 1e-30) continue;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (const Vec3* v : verts) {
        const double p = axis.dot(*v);
        lo = std::min(lo, p);
        hi = std::max(hi, p);
      }
      const double r = h.dot(axis.cwiseAbs());
      if (lo > r || hi < -r) return false;
    }
  }
  return true;
}

inline bool triangle_obb(const Vec3& a, const Vec3& b, const Vec3& c, const OrientedBox& box) {
  return triangle_box_local(box.to_local(a), box.to_local(b), box.to_local(c), box.half_extents);
}

// Conservative OBB/AABB overlap (15-axis SAT with a small slack), used only to
// prune BVH nodes: it may report overlap for boxes that merely come close,
// never the reverse.
inline bool obb_aabb_overlap(const OrientedBox& obb, const Aabb& aabb, double slack = 1e-7) {
  const Vec3 ha = 0.5 * aabb.extents();
  const Vec3 ca = aabb.center();
  const Mat3& R = obb.axes;  // columns: obb axes in world (= aabb) frame
  const Vec3& hb = obb.half_extents;
  const Vec3 t = obb.center - ca;
  Mat3 absR = R.cwiseAbs();
  absR.array() += 1e-12;

  // AABB axes.
  for (int i = 0; i < 3; ++i) {
    const double rb = absR.row(i).dot(hb);
    if (std::abs(t[i]) > ha[i] + rb + slack) return false;
  }
  // OBB axes.
  for (int j = 0; j < 3; ++j) {
    const double ra = absR.col(j).dot(ha);
    if (std::abs(R.col(j).dot(t)) > ra + hb[j] + slack) return false;
  }
  // Cross products e_i x b_j.
  for (int i = 0; i < 3; ++i) {
    const int i1 = (i + 1) % 3;
    const int i2 = (i + 2) % 3;
    for (int j = 0; j < 3; ++j) {
      const int j1 = (j + 1) % 3;
      const int j2 = (j + 2) % 3;
      const double ra = ha[i1] * absR(i2, j) + ha[i2] * absR(i1, j);
      const double rb = hb[j1] * absR(i, j2) + hb[j2] * absR(i, j1);
      const double proj = std::abs(t[i2] * R(i1, j) - t[i1] * R(i2, j));
      if (proj > ra + rb + slack) return false;
    }
  }
  return true;
}

}  // namespace graspcov::detail
