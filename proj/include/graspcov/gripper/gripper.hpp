#pragma once

// Parallel-jaw gripper geometry.
//
// Gripper frame (before applying the pose): the origin is the grasp centre,
// the midpoint between the two fingertips when the jaw is fully open. The
// approach axis points from the palm towards the fingertips, the closing
// axis points from the left finger to the right finger, and the lateral
// axis completes a right-handed frame (lateral = closing x approach).
// In that canonical (lateral, closing, approach) basis:
//
//   fingers   lateral in +-fx/2, closing in +-(W/2 .. W/2 + fy), approach in [-fz, 0]
//   palm      lateral in +-px/2, closing in +-py/2,             approach in [-L - pz, -L]
//   closing   lateral in +-fx/2, closing in +-W/2,              approach in [-L, 0]
//
// with W = max_opening, L = finger_length, (fx, fy, fz) = finger_box and
// (px, py, pz) = palm_box.

#include "graspcov/core/error.hpp"
#include "graspcov/mesh/trimesh.hpp"
#include "graspcov/se3/pose.hpp"

#include <cmath>
#include <optional>
#include <string_view>

namespace graspcov {

struct GripperSpec {
  double max_opening = 80.0;
  double finger_length = 53.8;
  Vec3 finger_box{20.0, 10.0, 53.8};  // (lateral, closing, approach) extents
  Vec3 palm_box{28.0, 63.0, 20.0};    // (lateral, closing, approach) extents
  Vec3 closing_axis = Vec3::UnitY();
  Vec3 approach_axis = Vec3::UnitZ();
  double contact_spacing = 2.5;       // max spacing of the contact ray grid, mm

  void validate() const {
    if (!(max_opening > 0.0)) throw Error(ErrorCode::InvalidArgument, "max_opening must be > 0");
    if (!(finger_length > 0.0)) throw Error(ErrorCode::InvalidArgument, "finger_length must be > 0");
    if ((finger_box.array() <= 0.0).any() || (palm_box.array() <= 0.0).any())
      throw Error(ErrorCode::InvalidArgument, "finger and palm boxes need positive extents");
    if (std::abs(closing_axis.norm() - 1.0) > 1e-9 || std::abs(approach_axis.norm() - 1.0) > 1e-9)
      throw Error(ErrorCode::InvalidArgument, "gripper axes must be unit vectors");
    if (std::abs(closing_axis.dot(approach_axis)) > 1e-9)
      throw Error(ErrorCode::InvalidArgument, "closing axis must be perpendicular to approach axis");
    if (!(contact_spacing > 0.0))
      throw Error(ErrorCode::InvalidArgument, "contact_spacing must be > 0");
  }

  /// Columns: lateral, closing, approach, expressed in the gripper frame.
  Mat3 canonical_basis() const {
    Mat3 b;
    b.col(0) = closing_axis.cross(approach_axis);
    b.col(1) = closing_axis;
    b.col(2) = approach_axis;
    return b;
  }

  int contact_rows() const { return static_cast<int>(std::ceil(finger_box.z() / contact_spacing - 1e-9)) + 1; }
  int contact_cols() const { return static_cast<int>(std::ceil(finger_box.x() / contact_spacing - 1e-9)) + 1; }
};

enum class Validity { Valid, CollidingBody, EmptyClosingRegion };

constexpr std::string_view to_string(Validity v) {
  switch (v) {
    case Validity::Valid: return "Valid";
    case Validity::CollidingBody: return "CollidingBody";
    case Validity::EmptyClosingRegion: return "EmptyClosingRegion";
  }
  return "?";
}

/// World-space boxes of a posed gripper.
struct GripperGeometry {
  Mat3 axes;  // world directions of (lateral, closing, approach)
  OrientedBox left_finger;
  OrientedBox right_finger;
  OrientedBox palm;
  OrientedBox closing_region;
  OrientedBox hull;  // encloses all of the above

  GripperGeometry(const Pose& pose, const GripperSpec& g) {
    axes = pose.rotation() * g.canonical_basis();
    const double W = g.max_opening, L = g.finger_length;
    const Vec3& fb = g.finger_box;
    const Vec3& pb = g.palm_box;
    auto make = [&](const Vec3& local_center, const Vec3& extents) {
      OrientedBox b;
      b.center = pose.p + axes * local_center;
      b.axes = axes;
      b.half_extents = 0.5 * extents;
      return b;
    };
    left_finger = make({0.0, -(W + fb.y()) / 2, -fb.z() / 2}, fb);
    right_finger = make({0.0, (W + fb.y()) / 2, -fb.z() / 2}, fb);
    palm = make({0.0, 0.0, -L - pb.z() / 2}, pb);
    closing_region = make({0.0, 0.0, -L / 2}, {fb.x(), W, L});
    const double hx = std::max(fb.x(), pb.x()) / 2;
    const double hy = std::max(W / 2 + fb.y(), pb.y() / 2);
    const double depth = std::max(L + pb.z(), fb.z());
    hull = make({0.0, 0.0, -depth / 2}, {2 * hx, 2 * hy, depth});
  }
};

/// Collision test first (either finger or the palm touching the object),
/// then the closing-region test.
inline Validity check_validity(const TriMesh& mesh, const Pose& pose, const GripperSpec& gripper) {
  const GripperGeometry geo(pose, gripper);
  if (!detail::obb_aabb_overlap(geo.hull, mesh.aabb())) return Validity::EmptyClosingRegion;
  if (volume_intersects(mesh, geo.left_finger) || volume_intersects(mesh, geo.right_finger) ||
      volume_intersects(mesh, geo.palm))
    return Validity::CollidingBody;
  if (!volume_intersects(mesh, geo.closing_region)) return Validity::EmptyClosingRegion;
  return Validity::Valid;
}

struct ContactPair {
  SurfacePoint left;
  SurfacePoint right;
  double jaw_width = 0.0;
};

/// Kinematic symmetric closing. Each finger's inner face is sampled by a
/// regular grid of rays (spacing <= contact_spacing) cast along the closing
/// direction up to the midplane; the finger's contact is the hit met first by
/// the advancing face. Returns nullopt if either finger reaches the midplane
/// without touching the object.
inline std::optional<ContactPair> close_fingers(const TriMesh& mesh, const Pose& pose,
                                                const GripperSpec& gripper) {
  const GripperGeometry geo(pose, gripper);
  const double W = gripper.max_opening;
  const double fx = gripper.finger_box.x();
  const double fz = gripper.finger_box.z();
  const int cols = gripper.contact_cols();
  const int rows = gripper.contact_rows();
  const double dx = fx / (cols - 1);
  const double dz = fz / (rows - 1);

  OrientedBox sweep;
  sweep.axes = geo.axes;
  sweep.center = pose.p + geo.axes * Vec3(0.0, 0.0, -fz / 2);
  sweep.half_extents = Vec3(fx / 2, W / 2, fz / 2);
  const std::vector<std::uint32_t> candidates = faces_in_box(mesh, sweep);

  struct Best {
    double y = 0.0;
    int ray = -1;
    std::uint32_t face = 0;
    bool found = false;
  };
  Best left, right;
  left.y = std::numeric_limits<double>::infinity();
  right.y = -std::numeric_limits<double>::infinity();

  const Mat3 to_local = geo.axes.transpose();
  constexpr double slack = detail::kBarycentricSlack;
  for (std::uint32_t f : candidates) {
    const auto tri = mesh.triangle(f);
    Vec3 v[3];
    for (int k = 0; k < 3; ++k) v[k] = to_local * (tri[k] - pose.p);
    // Rays run along local +-y, so intersect in the (x, z) projection.
    const double det = (v[1].x() - v[0].x()) * (v[2].z() - v[0].z()) -
                       (v[2].x() - v[0].x()) * (v[1].z() - v[0].z());
    const double scale = (v[1] - v[0]).norm() * (v[2] - v[0]).norm();
    if (std::abs(det) <= 1e-14 * scale) continue;  // edge-on to the rays
    const double xmin = std::min({v[0].x(), v[1].x(), v[2].x()});
    const double xmax = std::max({v[0].x(), v[1].x(), v[2].x()});
    const double zmin = std::min({v[0].z(), v[1].z(), v[2].z()});
    const double zmax = std::max({v[0].z(), v[1].z(), v[2].z()});
    const int c0 = std::max(0, static_cast<int>(std::floor((xmin + fx / 2) / dx)));
    const int c1 = std::min(cols - 1, static_cast<int>(std::ceil((xmax + fx / 2) / dx)));
    const int r0 = std::max(0, static_cast<int>(std::floor(-zmax / dz)));
    const int r1 = std::min(rows - 1, static_cast<int>(std::ceil(-zmin / dz)));
    for (int r = r0; r <= r1; ++r) {
      const double z = -r * dz;
      for (int c = c0; c <= c1; ++c) {
        const double x = -fx / 2 + c * dx;
        const double b1 = ((x - v[0].x()) * (v[2].z() - v[0].z()) - (v[2].x() - v[0].x()) * (z - v[0].z())) / det;
        const double b2 = ((v[1].x() - v[0].x()) * (z - v[0].z()) - (x - v[0].x()) * (v[1].z() - v[0].z())) / det;
        if (b1 < -slack || b2 < -slack || b1 + b2 > 1.0 + slack) continue;
        const double y = v[0].y() + b1 * (v[1].y() - v[0].y()) + b2 * (v[2].y() - v[0].y());
        const int ray = r * cols + c;
        if (y >= -W / 2 && y <= 0.0) {
          if (!left.found || y < left.y || (y == left.y && (ray < left.ray || (ray == left.ray && f < left.face))))
            left = {y, ray, f, true};
        }
        if (y <= W / 2 && y >= 0.0) {
          if (!right.found || y > right.y || (y == right.y && (ray < right.ray || (ray == right.ray && f < right.face))))
            right = {y, ray, f, true};
        }
      }
    }
  }
  if (!left.found || !right.found) return std::nullopt;

  auto contact = [&](const Best& b) {
    const int r = b.ray / cols, c = b.ray % cols;
    SurfacePoint sp;
    sp.position = pose.p + geo.axes * Vec3(-fx / 2 + c * dx, b.y, -r * dz);
    sp.normal = mesh.face_normals()[b.face];
    sp.face = b.face;
    return sp;
  };
  ContactPair out;
  out.left = contact(left);
  out.right = contact(right);
  out.jaw_width = right.y - left.y;
  return out;
}

}  // namespace graspcov
