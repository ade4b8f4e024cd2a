#pragma once

// Independent reference computations for tests: exhaustive loops with no
// acceleration structure.

#include "graspcov/mesh/trimesh.hpp"
#include "graspcov/se3/pose.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace brute {

using namespace graspcov;

/// arccos form of the grasp distance, computed in long double.
inline double distance_acos(const Pose& g, const Pose& h, double omega = kPi / 360.0) {
  const long double dot = static_cast<long double>(g.q.w()) * h.q.w() +
                          static_cast<long double>(g.q.x()) * h.q.x() +
                          static_cast<long double>(g.q.y()) * h.q.y() +
                          static_cast<long double>(g.q.z()) * h.q.z();
  const long double c = std::min(1.0L, std::fabs(dot));
  const Eigen::Matrix<long double, 3, 1> d = g.p.cast<long double>() - h.p.cast<long double>();
  return static_cast<double>(omega * std::sqrt(d.squaredNorm()) + std::acos(c));
}

struct Nearest {
  std::size_t index = 0;
  double distance = std::numeric_limits<double>::infinity();
};

inline Nearest nearest(std::span<const Pose> xs, const Pose& q, const MetricParams& params = {}) {
  Nearest best;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = pose_distance(q, xs[i], params);
    if (d < best.distance) best = {i, d};
  }
  return best;
}

inline std::vector<std::size_t> within(std::span<const Pose> xs, const Pose& q, double r,
                                       const MetricParams& params = {}) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (pose_distance(q, xs[i], params) <= r) out.push_back(i);
  return out;
}

inline std::vector<double> nearest_distances(std::span<const Pose> xs, std::span<const Pose> refs,
                                             const MetricParams& params = {}) {
  std::vector<double> out;
  for (const Pose& g : refs) out.push_back(nearest(xs, g, params).distance);
  return out;
}

/// Every face the ray crosses (t > t_min), nearest first.
inline std::vector<double> ray_hits(const TriMesh& mesh, const Vec3& o, const Vec3& d,
                                    double t_min = kRayEpsilon) {
  std::vector<double> ts;
  for (std::uint32_t f = 0; f < mesh.faces().size(); ++f) {
    const auto tri = mesh.triangle(f);
    if (auto t = detail::ray_triangle(o, d, tri[0], tri[1], tri[2], t_min,
                                      std::numeric_limits<double>::infinity()))
      ts.push_back(*t);
  }
  std::sort(ts.begin(), ts.end());
  return ts;
}

/// Dense point sampling of a triangle: true if any sample lies inside the box
/// (shrunk by `margin`). Only detects overlaps deeper than the sample spacing.
inline bool triangle_hits_box_sampled(const std::array<Vec3, 3>& tri, const OrientedBox& box,
                                      int n = 60, double margin = 0.0) {
  for (int i = 0; i <= n; ++i)
    for (int j = 0; i + j <= n; ++j) {
      const Vec3 p = tri[0] + (tri[1] - tri[0]) * (double(i) / n) + (tri[2] - tri[0]) * (double(j) / n);
      const Vec3 l = box.to_local(p);
      if ((l.cwiseAbs().array() <= (box.half_extents.array() - margin)).all()) return true;
    }
  return false;
}

}  // namespace brute
