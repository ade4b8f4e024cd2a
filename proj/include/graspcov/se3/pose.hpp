#pragma once

#include "graspcov/core/error.hpp"
#include "graspcov/core/types.hpp"

#include <cmath>

namespace graspcov {

/// Canonical representative of the double cover: w >= 0, and for w == 0 the
/// first nonzero of (x, y, z) is positive. Also renormalises.
inline Quat canonical(Quat q) {
  q.normalize();
  const double c[4] = {q.w(), q.x(), q.y(), q.z()};
  for (double v : c) {
    if (v > 0.0) return q;
    if (v < 0.0) return Quat(-q.w(), -q.x(), -q.y(), -q.z());
  }
  return q;
}

/// Rigid gripper pose: position in mm and a canonical unit quaternion.
struct Pose {
  Vec3 p = Vec3::Zero();
  Quat q = Quat::Identity();

  Pose() = default;
  Pose(const Vec3& position, const Quat& orientation) : p(position), q(canonical(orientation)) {}
  Pose(const Vec3& position, const Mat3& rotation) : p(position), q(canonical(Quat(rotation))) {}

  Mat3 rotation() const { return q.toRotationMatrix(); }
  Vec3 apply(const Vec3& local) const { return p + q * local; }

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.p == b.p && a.q.coeffs() == b.q.coeffs();
  }
};

/// Left-multiplies a pose by a rigid transform (rotation R, translation t).
inline Pose compose(const Mat3& rotation, const Vec3& translation, const Pose& pose) {
  return Pose(rotation * pose.p + translation, Quat(rotation) * pose.q);
}

/// Weight relating translation (mm) and rotation (rad) in the grasp distance.
struct MetricParams {
  double omega = kPi / 360.0;

  MetricParams() = default;
  explicit MetricParams(double w) : omega(w) {
    if (!(w > 0.0)) throw Error(ErrorCode::InvalidArgument, "omega must be positive");
  }
};

/// Geodesic angle arccos|<a, b>| between unit quaternions, computed in the
/// half-chord form 2*atan2(|a - b|, |a + b|) (with b's sign chosen so that
/// <a, b> >= 0). Mathematically identical to the arccos form but accurate
/// for nearly equal orientations.
inline double quat_angle(const Quat& a, const Quat& b) {
  const Eigen::Vector4d va = a.coeffs();
  Eigen::Vector4d vb = b.coeffs();
  if (va.dot(vb) < 0.0) vb = -vb;
  return 2.0 * std::atan2((va - vb).norm(), (va + vb).norm());
}

/// rho(g, h) = omega * |g.p - h.p| + arccos|<g.q, h.q>|.
inline double pose_distance(const Pose& g, const Pose& h, const MetricParams& params = {}) {
  return params.omega * (g.p - h.p).norm() + quat_angle(g.q, h.q);
}

}  // namespace graspcov
