#pragma once

#include "graspcov/core/random.hpp"
#include "graspcov/se3/pose.hpp"

#include <cmath>
#include <utility>

namespace graspcov {

/// Right-handed orthonormal pair (e1, e2) completing unit vector n.
/// Branchless construction (Duff et al.), deterministic in n.
inline std::pair<Vec3, Vec3> orthonormal_basis(const Vec3& n) {
  const double sign = std::copysign(1.0, n.z());
  const double a = -1.0 / (sign + n.z());
  const double b = n.x() * n.y() * a;
  Vec3 e1(1.0 + sign * n.x() * n.x() * a, sign * b, -sign * n.x());
  Vec3 e2(b, sign + n.y() * n.y() * a, -n.y());
  return {e1, e2};
}

inline Vec3 random_unit_vector(Rng& rng) {
  const double z = uniform(rng, -1.0, 1.0);
  const double phi = uniform(rng, 0.0, 2.0 * kPi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

/// Direction uniform over the spherical cap of the given half-angle around
/// `axis` (unit). Half-angle 0 returns `axis` exactly; pi covers the sphere.
inline Vec3 sample_cone(const Vec3& axis, double half_angle, Rng& rng) {
  const double u = uniform01(rng);
  const double v = uniform01(rng);
  if (half_angle <= 0.0) return axis;
  const double cos_t = 1.0 - u * (1.0 - std::cos(half_angle));
  const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
  const double phi = 2.0 * kPi * v;
  const auto [e1, e2] = orthonormal_basis(axis);
  return (cos_t * axis + sin_t * (std::cos(phi) * e1 + std::sin(phi) * e2)).normalized();
}

/// Uniform rotation by Shoemake's subgroup algorithm.
inline Quat random_rotation(Rng& rng) {
  const double u1 = uniform01(rng);
  const double u2 = uniform(rng, 0.0, 2.0 * kPi);
  const double u3 = uniform(rng, 0.0, 2.0 * kPi);
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  return canonical(Quat(a * std::sin(u2), a * std::cos(u2), b * std::sin(u3), b * std::cos(u3)));
}

/// Position uniform in `bounds`, orientation uniform on SO(3).
inline Pose sample_uniform_pose(const Aabb& bounds, Rng& rng) {
  if (bounds.empty()) throw Error(ErrorCode::InvalidArgument, "empty pose bounds");
  Vec3 p;
  for (int i = 0; i < 3; ++i) p[i] = uniform(rng, bounds.min[i], bounds.max[i]);
  return Pose(p, random_rotation(rng));
}

}  // namespace graspcov
