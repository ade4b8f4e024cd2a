#pragma once

// Closed test solids in millimetres. All are watertight with outward normals.

#include "graspcov/mesh/trimesh.hpp"

#include <cmath>
#include <map>
#include <vector>

namespace graspcov::shapes {

/// Right prism over a counter-clockwise polygon in the xy-plane, extruded
/// along z over [z0, z0 + height]. The polygon must be star-shaped with
/// respect to its first vertex (caps are fan-triangulated from it).
inline TriMesh make_prism(const std::vector<Eigen::Vector2d>& polygon, double z0, double height) {
  const auto n = static_cast<std::uint32_t>(polygon.size());
  std::vector<Vec3> v;
  for (const auto& p : polygon) v.emplace_back(p.x(), p.y(), z0);
  for (const auto& p : polygon) v.emplace_back(p.x(), p.y(), z0 + height);
  std::vector<Face> f;
  for (std::uint32_t k = 1; k + 1 < n; ++k) {
    f.push_back({0, k + 1, k});          // bottom, facing -z
    f.push_back({n, n + k, n + k + 1});  // top, facing +z
  }
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t j = (i + 1) % n;
    f.push_back({i, j, n + j});
    f.push_back({i, n + j, n + i});
  }
  return TriMesh(std::move(v), std::move(f));
}

/// Axis-aligned box with the given full extents, centred at `center`.
inline TriMesh make_box(const Vec3& extents, const Vec3& center = Vec3::Zero()) {
  const double hx = extents.x() / 2, hy = extents.y() / 2;
  std::vector<Eigen::Vector2d> rect = {{center.x() - hx, center.y() - hy},
                                       {center.x() + hx, center.y() - hy},
                                       {center.x() + hx, center.y() + hy},
                                       {center.x() - hx, center.y() + hy}};
  return make_prism(rect, center.z() - extents.z() / 2, extents.z());
}

inline TriMesh make_cube(double edge) { return make_box(Vec3::Constant(edge)); }

/// L-shaped bracket: a `length` x `thickness` base leg and a `thickness` x
/// `height` upright leg in the xy-plane, extruded `width` along z. Centred on
/// its bounding box.
inline TriMesh make_l_bracket(double length = 50.0, double height = 40.0, double thickness = 6.0,
                              double width = 20.0) {
  const double cx = length / 2, cy = height / 2;
  std::vector<Eigen::Vector2d> poly = {{0 - cx, 0 - cy},
                                       {length - cx, 0 - cy},
                                       {length - cx, thickness - cy},
                                       {thickness - cx, thickness - cy},
                                       {thickness - cx, height - cy},
                                       {0 - cx, height - cy}};
  return make_prism(poly, -width / 2, width);
}

/// Regular n-gon prism approximating a cylinder along z, centred at the origin.
inline TriMesh make_cylinder(double radius, double height, int segments = 32) {
  std::vector<Eigen::Vector2d> poly;
  for (int k = 0; k < segments; ++k) {
    const double a = 2 * kPi * (k + 0.5) / segments;
    poly.emplace_back(radius * std::cos(a), radius * std::sin(a));
  }
  return make_prism(poly, -height / 2, height);
}

/// Icosphere centred at the origin with `subdivisions` rounds of 4-to-1 splits.
inline TriMesh make_sphere(double radius, int subdivisions = 3) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (Vec3& p : v) p.normalize();
  std::vector<Face> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                         {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                         {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                         {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
    auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      v.push_back((v[a] + v[b]).normalized());
      const auto idx = static_cast<std::uint32_t>(v.size() - 1);
      mid.emplace(key, idx);
      return idx;
    };
    std::vector<Face> next;
    for (const Face& tri : f) {
      const std::uint32_t a = midpoint(tri[0], tri[1]);
      const std::uint32_t b = midpoint(tri[1], tri[2]);
      const std::uint32_t c = midpoint(tri[2], tri[0]);
      next.push_back({tri[0], a, c});
      next.push_back({tri[1], b, a});
      next.push_back({tri[2], c, b});
      next.push_back({a, b, c});
    }
    f = std::move(next);
  }
  for (Vec3& p : v) p *= radius;
  return TriMesh(std::move(v), std::move(f));
}

/// Open-topped cup (thick cylindrical wall and base) with a C-shaped handle
/// built from three blocks. The handle blocks are separate closed shells that
/// touch the cup only along a shared facet plane.
inline TriMesh make_mug(double outer_radius = 30.0, double inner_radius = 26.0,
                        double height = 70.0, double base = 4.0, int segments = 24) {
  std::vector<Vec3> v;
  std::vector<Face> f;
  const auto n = static_cast<std::uint32_t>(segments);
  const double z0 = -height / 2, z1 = height / 2, zb = z0 + base;
  // Rings: outer bottom, outer top, inner top, inner bottom; plus two centres.
  const double rings[4][2] = {{outer_radius, z0}, {outer_radius, z1}, {inner_radius, z1}, {inner_radius, zb}};
  for (const auto& ring : rings) {
    for (std::uint32_t k = 0; k < n; ++k) {
      const double a = 2 * kPi * (k + 0.5) / segments;
      v.emplace_back(ring[0] * std::cos(a), ring[0] * std::sin(a), ring[1]);
    }
  }
  const std::uint32_t c_bottom = static_cast<std::uint32_t>(v.size());
  v.emplace_back(0, 0, z0);
  const std::uint32_t c_inner = static_cast<std::uint32_t>(v.size());
  v.emplace_back(0, 0, zb);
  auto ring = [n](std::uint32_t r, std::uint32_t k) { return r * n + (k % n); };
  for (std::uint32_t k = 0; k < n; ++k) {
    f.push_back({c_bottom, ring(0, k + 1), ring(0, k)});                // base underside
    f.push_back({ring(0, k), ring(0, k + 1), ring(1, k + 1)});          // outer wall
    f.push_back({ring(0, k), ring(1, k + 1), ring(1, k)});
    f.push_back({ring(1, k), ring(1, k + 1), ring(2, k + 1)});          // rim
    f.push_back({ring(1, k), ring(2, k + 1), ring(2, k)});
    f.push_back({ring(2, k), ring(2, k + 1), ring(3, k + 1)});          // inner wall, faces the cavity
    f.push_back({ring(2, k), ring(3, k + 1), ring(3, k)});
    f.push_back({c_inner, ring(3, k), ring(3, k + 1)});                 // inner floor
  }

  // Handle on the facet centred at angle pi (which lies at x = -apothem).
  const double apothem = outer_radius * std::cos(kPi / segments);
  auto add_block = [&](const Vec3& lo, const Vec3& hi) {
    const TriMesh box = make_box(hi - lo, 0.5 * (lo + hi));
    const auto offset = static_cast<std::uint32_t>(v.size());
    for (const Vec3& p : box.vertices()) v.push_back(p);
    for (const Face& tri : box.faces()) f.push_back({tri[0] + offset, tri[1] + offset, tri[2] + offset});
  };
  const double reach = 18.0, bar = 5.0, arm = 5.0, half_w = 4.0;
  add_block({-apothem - reach + bar, -half_w, 12.0}, {-apothem, half_w, 12.0 + arm});
  add_block({-apothem - reach + bar, -half_w, -22.0}, {-apothem, half_w, -22.0 + arm});
  add_block({-apothem - reach, -half_w, -22.0}, {-apothem - reach + bar, half_w, 12.0 + arm});
  return TriMesh(std::move(v), std::move(f));
}

}  // namespace graspcov::shapes
