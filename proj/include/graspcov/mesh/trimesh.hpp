#pragma once

#include "graspcov/core/error.hpp"
#include "graspcov/core/random.hpp"
#include "graspcov/core/types.hpp"
#include "graspcov/mesh/bvh.hpp"
#include "graspcov/mesh/intersect.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace graspcov {

using Face = std::array<std::uint32_t, 3>;

/// Faces with area below this (mm^2) are dropped at construction.
inline constexpr double kDegenerateArea = 1e-10;

/// Minimum ray parameter (mm); keeps rays cast from a surface point from
/// re-hitting their own face.
inline constexpr double kRayEpsilon = 1e-4;

struct SurfacePoint {
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  std::uint32_t face = 0;
};

struct RayHit {
  double t = 0.0;
  Vec3 position = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
  std::uint32_t face = 0;
};

/// Indexed triangle mesh in millimetres with precomputed per-face data and a
/// BVH. Immutable after construction, so concurrent read-only queries are
/// safe.
class TriMesh {
 public:
  TriMesh() = default;

  /// Builds the mesh, dropping faces with area < kDegenerateArea. Throws
  /// ParseError on out-of-range indices and EmptyMesh if no face survives.
  TriMesh(std::vector<Vec3> vertices, std::vector<Face> faces) : vertices_(std::move(vertices)) {
    for (const Face& f : faces) {
      for (std::uint32_t idx : f) {
        if (idx >= vertices_.size())
          throw Error(ErrorCode::ParseError, "face index " + std::to_string(idx) +
                                                 " out of range for " +
                                                 std::to_string(vertices_.size()) + " vertices");
      }
      const Vec3 n = (vertices_[f[1]] - vertices_[f[0]]).cross(vertices_[f[2]] - vertices_[f[0]]);
      const double area = 0.5 * n.norm();
      if (!(area >= kDegenerateArea)) {
        ++dropped_faces_;
        continue;
      }
      faces_.push_back(f);
    }
    if (faces_.empty()) throw Error(ErrorCode::EmptyMesh, "mesh has no non-degenerate faces");

    for (const Vec3& v : vertices_) aabb_.expand(v);
    watertight_ = check_closed_manifold();
    if (watertight_ && signed_volume() < 0.0) {
      for (Face& f : faces_) std::swap(f[1], f[2]);
    }
    compute_face_data();
    compute_com();

    std::vector<Aabb> boxes(faces_.size());
    for (std::size_t i = 0; i < faces_.size(); ++i) {
      for (std::uint32_t idx : faces_[i]) boxes[i].expand(vertices_[idx]);
    }
    bvh_ = Bvh(boxes);
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<Face>& faces() const { return faces_; }
  const std::vector<Vec3>& face_normals() const { return normals_; }
  const std::vector<double>& face_areas() const { return areas_; }
  const Aabb& aabb() const { return aabb_; }
  const Vec3& com() const { return com_; }
  const Bvh& bvh() const { return bvh_; }

  double total_area() const { return cumulative_area_.empty() ? 0.0 : cumulative_area_.back(); }
  double volume() const { return watertight_ ? signed_volume() : 0.0; }
  /// Closed two-manifold with consistently oriented faces.
  bool watertight() const { return watertight_; }
  /// True when com() is the solid centroid; false for the surface fallback.
  bool com_is_volume_centroid() const { return com_is_volume_; }
  std::size_t dropped_faces() const { return dropped_faces_; }
  const std::vector<double>& cumulative_area() const { return cumulative_area_; }

  std::array<Vec3, 3> triangle(std::uint32_t f) const {
    return {vertices_[faces_[f][0]], vertices_[faces_[f][1]], vertices_[faces_[f][2]]};
  }

 private:
  bool check_closed_manifold() const {
    // Each directed edge must appear once and its reverse exactly once.
    std::map<std::pair<std::uint32_t, std::uint32_t>, int> directed;
    for (const Face& f : faces_) {
      for (int k = 0; k < 3; ++k) {
        if (++directed[{f[k], f[(k + 1) % 3]}] > 1) return false;
      }
    }
    for (const auto& [edge, count] : directed) {
      auto it = directed.find({edge.second, edge.first});
      if (it == directed.end() || it->second != 1) return false;
    }
    return true;
  }

  double signed_volume() const {
    double v = 0.0;
    for (const Face& f : faces_)
      v += vertices_[f[0]].dot(vertices_[f[1]].cross(vertices_[f[2]])) / 6.0;
    return v;
  }

  void compute_face_data() {
    normals_.resize(faces_.size());
    areas_.resize(faces_.size());
    cumulative_area_.resize(faces_.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < faces_.size(); ++i) {
      const auto [a, b, c] = triangle(static_cast<std::uint32_t>(i));
      const Vec3 n = (b - a).cross(c - a);
      areas_[i] = 0.5 * n.norm();
      normals_[i] = n.normalized();
      acc += areas_[i];
      cumulative_area_[i] = acc;
    }
  }

  void compute_com() {
    if (watertight_) {
      double vol = 0.0;
      Vec3 acc = Vec3::Zero();
      for (const Face& f : faces_) {
        const Vec3& a = vertices_[f[0]];
        const Vec3& b = vertices_[f[1]];
        const Vec3& c = vertices_[f[2]];
        const double v = a.dot(b.cross(c)) / 6.0;
        vol += v;
        acc += v * (a + b + c) / 4.0;
      }
      if (vol > 0.0) {
        com_ = acc / vol;
        com_is_volume_ = true;
        return;
      }
    }
    Vec3 acc = Vec3::Zero();
    for (std::size_t i = 0; i < faces_.size(); ++i) {
      const auto [a, b, c] = triangle(static_cast<std::uint32_t>(i));
      acc += areas_[i] * (a + b + c) / 3.0;
    }
    com_ = acc / total_area();
    com_is_volume_ = false;
  }

  std::vector<Vec3> vertices_;
  std::vector<Face> faces_;
  std::vector<Vec3> normals_;
  std::vector<double> areas_;
  std::vector<double> cumulative_area_;
  Aabb aabb_;
  Vec3 com_ = Vec3::Zero();
  Bvh bvh_;
  bool watertight_ = false;
  bool com_is_volume_ = false;
  std::size_t dropped_faces_ = 0;
};

/// Rigidly transformed copy: x -> rotation * x + translation.
inline TriMesh transformed(const TriMesh& mesh, const Mat3& rotation, const Vec3& translation) {
  std::vector<Vec3> verts;
  verts.reserve(mesh.vertices().size());
  for (const Vec3& v : mesh.vertices()) verts.push_back(rotation * v + translation);
  return TriMesh(std::move(verts), mesh.faces());
}

// ---------------------------------------------------------------------------
// Surface sampling

inline SurfacePoint sample_surface_point(const TriMesh& mesh, Rng& rng) {
  const auto& cdf = mesh.cumulative_area();
  const double r = uniform01(rng) * cdf.back();
  auto it = std::upper_bound(cdf.begin(), cdf.end(), r);
  if (it == cdf.end()) --it;
  const auto face = static_cast<std::uint32_t>(it - cdf.begin());
  const double s = std::sqrt(uniform01(rng));
  const double t = uniform01(rng);
  const auto [a, b, c] = mesh.triangle(face);
  SurfacePoint sp;
  sp.position = (1.0 - s) * a + s * (1.0 - t) * b + s * t * c;
  sp.normal = mesh.face_normals()[face];
  sp.face = face;
  return sp;
}

/// n points drawn uniformly with respect to surface area.
inline std::vector<SurfacePoint> sample_surface(const TriMesh& mesh, Rng& rng, std::size_t n) {
  std::vector<SurfacePoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_surface_point(mesh, rng));
  return out;
}

// ---------------------------------------------------------------------------
// Ray casting

enum class RayMode { First, Farthest, All };

namespace detail {

inline RayHit make_hit(const TriMesh& mesh, const Vec3& origin, const Vec3& dir, double t,
                       std::uint32_t face) {
  return RayHit{t, origin + t * dir, mesh.face_normals()[face], face};
}

inline Vec3 inverse_direction(const Vec3& dir) {
  return Vec3(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
}

}  // namespace detail

/// Nearest hit with t in [kRayEpsilon, t_max]; ties go to the lower face index.
inline std::optional<RayHit> raycast_first(const TriMesh& mesh, const Vec3& origin,
                                           const Vec3& dir,
                                           double t_max = std::numeric_limits<double>::infinity()) {
  const Vec3 inv = detail::inverse_direction(dir);
  double best = t_max;
  std::optional<std::uint32_t> best_face;
  mesh.bvh().traverse(
      [&](const Aabb& box) { return detail::ray_aabb(origin, inv, box, kRayEpsilon, best).has_value(); },
      [&](std::uint32_t f) {
        const auto [a, b, c] = mesh.triangle(f);
        if (auto t = detail::ray_triangle(origin, dir, a, b, c, kRayEpsilon, best)) {
          if (!best_face || *t < best || (*t == best && f < *best_face)) {
            best = *t;
            best_face = f;
          }
        }
        return true;
      });
  if (!best_face) return std::nullopt;
  return detail::make_hit(mesh, origin, dir, best, *best_face);
}

/// Farthest hit with t in [kRayEpsilon, t_max]; ties go to the lower face index.
inline std::optional<RayHit> raycast_farthest(
    const TriMesh& mesh, const Vec3& origin, const Vec3& dir,
    double t_max = std::numeric_limits<double>::infinity()) {
  const Vec3 inv = detail::inverse_direction(dir);
  double best = kRayEpsilon;
  std::optional<std::uint32_t> best_face;
  mesh.bvh().traverse(
      [&](const Aabb& box) { return detail::ray_aabb(origin, inv, box, best, t_max).has_value(); },
      [&](std::uint32_t f) {
        const auto [a, b, c] = mesh.triangle(f);
        if (auto t = detail::ray_triangle(origin, dir, a, b, c, best, t_max)) {
          if (!best_face || *t > best || (*t == best && f < *best_face)) {
            best = *t;
            best_face = f;
          }
        }
        return true;
      });
  if (!best_face) return std::nullopt;
  return detail::make_hit(mesh, origin, dir, best, *best_face);
}

/// Every hit with t in [kRayEpsilon, t_max], sorted by (t, face).
inline std::vector<RayHit> raycast_all(const TriMesh& mesh, const Vec3& origin, const Vec3& dir,
                                       double t_max = std::numeric_limits<double>::infinity()) {
  const Vec3 inv = detail::inverse_direction(dir);
  std::vector<RayHit> hits;
  mesh.bvh().traverse(
      [&](const Aabb& box) { return detail::ray_aabb(origin, inv, box, kRayEpsilon, t_max).has_value(); },
      [&](std::uint32_t f) {
        const auto [a, b, c] = mesh.triangle(f);
        if (auto t = detail::ray_triangle(origin, dir, a, b, c, kRayEpsilon, t_max))
          hits.push_back(detail::make_hit(mesh, origin, dir, *t, f));
        return true;
      });
  std::sort(hits.begin(), hits.end(), [](const RayHit& x, const RayHit& y) {
    return x.t != y.t ? x.t < y.t : x.face < y.face;
  });
  return hits;
}

/// Mode-dispatching form; First/Farthest return at most one hit.
inline std::vector<RayHit> raycast(const TriMesh& mesh, const Vec3& origin, const Vec3& dir,
                                   RayMode mode) {
  switch (mode) {
    case RayMode::First:
      if (auto h = raycast_first(mesh, origin, dir)) return {*h};
      return {};
    case RayMode::Farthest:
      if (auto h = raycast_farthest(mesh, origin, dir)) return {*h};
      return {};
    case RayMode::All:
      return raycast_all(mesh, origin, dir);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Volume queries

namespace detail {

// Fixed, deliberately irrational-looking directions for parity tests.
inline const std::array<Vec3, 3>& parity_directions() {
  static const std::array<Vec3, 3> dirs = {Vec3(0.4317, 0.6571, 0.6182).normalized(),
                                           Vec3(-0.7213, 0.2917, 0.6281).normalized(),
                                           Vec3(0.1873, -0.8629, 0.4693).normalized()};
  return dirs;
}

}  // namespace detail

/// Point-in-solid by crossing parity, majority over three directions.
/// Only meaningful for watertight meshes; returns false otherwise.
inline bool contains_point(const TriMesh& mesh, const Vec3& p) {
  if (!mesh.watertight() || !mesh.aabb().contains(p)) return false;
  int inside_votes = 0;
  for (const Vec3& d : detail::parity_directions()) {
    std::size_t crossings = 0;
    const Vec3 inv = detail::inverse_direction(d);
    mesh.bvh().traverse(
        [&](const Aabb& box) {
          return detail::ray_aabb(p, inv, box, 0.0, std::numeric_limits<double>::infinity())
              .has_value();
        },
        [&](std::uint32_t f) {
          const auto [a, b, c] = mesh.triangle(f);
          if (detail::ray_triangle(p, d, a, b, c, 0.0, std::numeric_limits<double>::infinity()))
            ++crossings;
          return true;
        });
    inside_votes += (crossings % 2 == 1) ? 1 : 0;
  }
  return inside_votes >= 2;
}

/// Indices of faces that intersect the box, ascending.
inline std::vector<std::uint32_t> faces_in_box(const TriMesh& mesh, const OrientedBox& box) {
  std::vector<std::uint32_t> out;
  mesh.bvh().traverse([&](const Aabb& node) { return detail::obb_aabb_overlap(box, node); },
                      [&](std::uint32_t f) {
                        const auto [a, b, c] = mesh.triangle(f);
                        if (detail::triangle_obb(a, b, c, box)) out.push_back(f);
                        return true;
                      });
  std::sort(out.begin(), out.end());
  return out;
}

/// True iff any triangle touches the box, or the box lies inside the closed
/// mesh. Non-watertight meshes only report boundary intersections.
inline bool volume_intersects(const TriMesh& mesh, const OrientedBox& box) {
  if (!detail::obb_aabb_overlap(box, mesh.aabb())) return false;
  bool hit = false;
  mesh.bvh().traverse([&](const Aabb& node) { return detail::obb_aabb_overlap(box, node); },
                      [&](std::uint32_t f) {
                        const auto [a, b, c] = mesh.triangle(f);
                        hit = detail::triangle_obb(a, b, c, box);
                        return !hit;
                      });
  if (hit) return true;
  // No boundary crossing: the box is entirely inside or entirely outside.
  return contains_point(mesh, box.center);
}

}  // namespace graspcov
