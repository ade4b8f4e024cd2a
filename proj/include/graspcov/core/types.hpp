#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <algorithm>
#include <limits>

namespace graspcov {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = 3.14159265358979323846;

constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

// Axis-aligned bounding box in mm.
struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  Aabb() = default;
  Aabb(const Vec3& lo, const Vec3& hi) : min(lo), max(hi) {}

  bool empty() const { return (min.array() > max.array()).any(); }

  void expand(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  void expand(const Aabb& b) {
    min = min.cwiseMin(b.min);
    max = max.cwiseMax(b.max);
  }

  Aabb dilated(double margin) const {
    return {min.array() - margin, max.array() + margin};
  }

  bool contains(const Vec3& p, double tol = 0.0) const {
    return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
  }

  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 extents() const { return max - min; }
};

// Box with arbitrary orientation. Columns of `axes` are the box axes in world
// coordinates and must be orthonormal.
struct OrientedBox {
  Vec3 center = Vec3::Zero();
  Mat3 axes = Mat3::Identity();
  Vec3 half_extents = Vec3::Zero();

  Vec3 to_local(const Vec3& p) const { return axes.transpose() * (p - center); }

  // World-space AABB enclosing the box.
  Aabb bounds() const {
    const Vec3 r = axes.cwiseAbs() * half_extents;
    return {center - r, center + r};
  }
};

}  // namespace graspcov
