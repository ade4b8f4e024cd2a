#pragma once

// Deterministic orientation and pose grids.
//
// Orientations come from a Hopf-fibration product: a geodesic (frequency-n
// subdivided icosahedron) grid on S^2 for the fibre base, times an evenly
// spaced circle grid for the fibre angle psi. For base point (theta, phi)
// and fibre angle psi the unit quaternion is
//
//   w = cos(theta/2) cos(psi/2)      x = cos(theta/2) sin(psi/2)
//   y = sin(theta/2) cos(phi + psi/2) z = sin(theta/2) sin(phi + psi/2)
//
// with psi in [0, 2pi), which covers SO(3) exactly once. The subdivision
// frequency is the smallest whose longest S^2 edge is at most the requested
// step; the circle gets ceil(360 / step) points.

#include "graspcov/core/error.hpp"
#include "graspcov/se3/pose.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

namespace graspcov {

struct GeodesicSphere {
  int frequency = 1;
  double max_edge = 0.0;  // radians
  double min_edge = 0.0;  // radians
  std::vector<Vec3> points;
};

inline GeodesicSphere geodesic_sphere(int frequency) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::array<Vec3, 12> ico = {Vec3{-1, t, 0}, Vec3{1, t, 0},  Vec3{-1, -t, 0}, Vec3{1, -t, 0},
                              Vec3{0, -1, t}, Vec3{0, 1, t},  Vec3{0, -1, -t}, Vec3{0, 1, -t},
                              Vec3{t, 0, -1}, Vec3{t, 0, 1},  Vec3{-t, 0, -1}, Vec3{-t, 0, 1}};
  for (Vec3& p : ico) p.normalize();
  static constexpr int kFaces[20][3] = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  GeodesicSphere out;
  out.frequency = frequency;
  out.min_edge = kPi;
  std::map<std::array<long long, 3>, std::uint32_t> seen;
  const int n = frequency;
  auto angle = [](const Vec3& a, const Vec3& b) { return std::atan2(a.cross(b).norm(), a.dot(b)); };
  for (const auto& face : kFaces) {
    const Vec3& A = ico[face[0]];
    const Vec3& B = ico[face[1]];
    const Vec3& C = ico[face[2]];
    auto point = [&](int i, int j) { return ((i * A + j * B + (n - i - j) * C) / n).normalized(); };
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; i + j <= n; ++j) {
        const Vec3 p = point(i, j);
        const std::array<long long, 3> key = {std::llround(p.x() * 1e9), std::llround(p.y() * 1e9),
                                              std::llround(p.z() * 1e9)};
        if (seen.try_emplace(key, static_cast<std::uint32_t>(out.points.size())).second)
          out.points.push_back(p);
        if (i + j < n) {
          const Vec3 q = point(i + 1, j);
          const Vec3 r = point(i, j + 1);
          for (double e : {angle(p, q), angle(q, r), angle(r, p)}) {
            out.max_edge = std::max(out.max_edge, e);
            out.min_edge = std::min(out.min_edge, e);
          }
        }
      }
    }
  }
  return out;
}

/// Geodesic S^2 grid with the smallest frequency whose longest edge is at
/// most `max_edge` radians.
inline GeodesicSphere geodesic_sphere_for_edge(double max_edge) {
  for (int n = 1;; ++n) {
    GeodesicSphere s = geodesic_sphere(n);
    if (s.max_edge <= max_edge || n >= 512) return s;
  }
}

inline int so3_ring_count(double rotation_step_deg) {
  return static_cast<int>(std::ceil(360.0 / rotation_step_deg - 1e-9));
}

/// Orientation grid with nominal spacing `rotation_step_deg` (0 < step <= 180).
/// Quaternions are canonical (w >= 0) and pairwise distinct.
inline std::vector<Quat> so3_grid(double rotation_step_deg) {
  if (!(rotation_step_deg > 0.0 && rotation_step_deg <= 180.0))
    throw Error(ErrorCode::InvalidStep, "rotation step must be in (0, 180] degrees, got " +
                                            std::to_string(rotation_step_deg));
  const GeodesicSphere sphere = geodesic_sphere_for_edge(deg_to_rad(rotation_step_deg));
  const int rings = so3_ring_count(rotation_step_deg);
  std::vector<Quat> out;
  out.reserve(sphere.points.size() * static_cast<std::size_t>(rings));
  for (const Vec3& s : sphere.points) {
    const double theta = std::acos(std::clamp(s.z(), -1.0, 1.0));
    const double phi = std::atan2(s.y(), s.x());
    const double ct = std::cos(theta / 2), st = std::sin(theta / 2);
    for (int k = 0; k < rings; ++k) {
      const double psi = 2.0 * kPi * k / rings;
      out.push_back(canonical(Quat(ct * std::cos(psi / 2), ct * std::sin(psi / 2),
                                   st * std::cos(phi + psi / 2), st * std::sin(phi + psi / 2))));
    }
  }
  return out;
}

/// Translation lattice step (mm), orientation step (degrees) and the box the
/// lattice covers.
struct GridSpec {
  double translation_step = 5.0;
  double rotation_step = 7.5;
  Aabb bounds{Vec3::Zero(), Vec3::Zero()};

  void validate() const {
    if (!(translation_step > 0.0))
      throw Error(ErrorCode::InvalidStep, "translation step must be positive");
    if (!(rotation_step > 0.0 && rotation_step <= 180.0))
      throw Error(ErrorCode::InvalidStep, "rotation step must be in (0, 180] degrees");
    if (bounds.empty()) throw Error(ErrorCode::InvalidArgument, "grid bounds are empty");
  }
};

/// Lazily indexed Cartesian product of the inclusive translation lattice and
/// so3_grid. Index order: translation-major (x, then y, then z), orientation
/// minor.
class Se3Grid {
 public:
  explicit Se3Grid(const GridSpec& spec) : spec_(spec) {
    spec.validate();
    orientations_ = so3_grid(spec.rotation_step);
    const Vec3 ext = spec.bounds.extents();
    for (int i = 0; i < 3; ++i)
      dims_[i] = static_cast<std::uint64_t>(std::ceil(ext[i] / spec.translation_step - 1e-9)) + 1;
  }

  const GridSpec& spec() const { return spec_; }
  const std::vector<Quat>& orientations() const { return orientations_; }
  std::array<std::uint64_t, 3> lattice_dims() const { return dims_; }
  std::uint64_t lattice_size() const { return dims_[0] * dims_[1] * dims_[2]; }
  std::uint64_t size() const { return lattice_size() * orientations_.size(); }

  Vec3 lattice_point(std::uint64_t t) const {
    const std::uint64_t iz = t % dims_[2];
    const std::uint64_t iy = (t / dims_[2]) % dims_[1];
    const std::uint64_t ix = t / (dims_[2] * dims_[1]);
    return spec_.bounds.min +
           spec_.translation_step * Vec3(static_cast<double>(ix), static_cast<double>(iy),
                                         static_cast<double>(iz));
  }

  Pose pose(std::uint64_t index) const {
    const std::uint64_t n_rot = orientations_.size();
    Pose out;
    out.p = lattice_point(index / n_rot);
    out.q = orientations_[index % n_rot];
    return out;
  }

  template <class Fn>
  void for_each(Fn&& fn) const {
    const std::uint64_t n = size();
    for (std::uint64_t i = 0; i < n; ++i) fn(i, pose(i));
  }

 private:
  GridSpec spec_;
  std::vector<Quat> orientations_;
  std::array<std::uint64_t, 3> dims_{};
};

}  // namespace graspcov
