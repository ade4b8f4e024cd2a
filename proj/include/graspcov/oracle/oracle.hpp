#pragma once

// Grasp labelling and exhaustive reference enumeration.
//
// A Valid grasp succeeds when, after kinematic closing, both contact normals
// lie inside the Coulomb friction cone about the respective jaw direction:
// the left contact normal must be within atan(mu) of -closing, the right
// contact normal within atan(mu) of +closing (normals point outward, so a
// good contact faces the finger that touches it).

#include "graspcov/core/error.hpp"
#include "graspcov/gripper/gripper.hpp"
#include "graspcov/mesh/trimesh.hpp"
#include "graspcov/se3/grid.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace graspcov {

inline constexpr const char* kOracleVersion = "ray-grid-coulomb-1";

struct GraspLabel {
  Validity validity = Validity::EmptyClosingRegion;
  bool success = false;
  double jaw_width = std::numeric_limits<double>::quiet_NaN();
  double quality = 0.0;  // 1 - worst cone angle / atan(mu), clamped to [0, 1]

  bool valid() const { return validity == Validity::Valid; }
};

inline double friction_half_angle(double mu) {
  if (!(mu > 0.0)) throw Error(ErrorCode::InvalidArgument, "friction coefficient must be > 0");
  return std::atan(mu);
}

/// Angle between two unit vectors, accurate near 0 and pi.
inline double unit_angle(const Vec3& a, const Vec3& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

/// Labels a grasp already known to be Valid.
inline GraspLabel label_valid_grasp(const TriMesh& mesh, const Pose& pose, const GripperSpec& gripper,
                                    double mu) {
  const double cone = friction_half_angle(mu);
  GraspLabel out;
  out.validity = Validity::Valid;
  const auto contacts = close_fingers(mesh, pose, gripper);
  if (!contacts) return out;
  out.jaw_width = contacts->jaw_width;
  const Vec3 closing = pose.rotation() * gripper.closing_axis;
  const double a_left = unit_angle(contacts->left.normal, -closing);
  const double a_right = unit_angle(contacts->right.normal, closing);
  const double worst = std::max(a_left, a_right);
  out.success = worst <= cone && contacts->jaw_width > 0.0;
  out.quality = std::clamp(1.0 - worst / cone, 0.0, 1.0);
  return out;
}

inline GraspLabel evaluate_grasp(const TriMesh& mesh, const Pose& pose, const GripperSpec& gripper,
                                 double mu = 1.0) {
  friction_half_angle(mu);
  const Validity v = check_validity(mesh, pose, gripper);
  if (v != Validity::Valid) {
    GraspLabel out;
    out.validity = v;
    return out;
  }
  return label_valid_grasp(mesh, pose, gripper, mu);
}

enum class NeighbourhoodMode { Valid, Enumerated };

constexpr std::string_view to_string(NeighbourhoodMode m) {
  return m == NeighbourhoodMode::Valid ? "valid" : "enumerated";
}

/// Exhaustive labelling of an SE(3) grid around one object. Only Valid grid
/// poses are stored; the enumerated count covers every grid pose.
struct ReferenceSet {
  std::string object_id;
  GridSpec grid;
  GripperSpec gripper;
  double mu = 1.0;
  double omega = MetricParams{}.omega;
  std::string oracle_version = kOracleVersion;

  std::uint64_t enumerated = 0;
  std::vector<Pose> poses;
  std::vector<std::uint64_t> grid_index;
  std::vector<GraspLabel> labels;

  // Filled by label_robustness.
  double robustness_eps = std::numeric_limits<double>::quiet_NaN();
  NeighbourhoodMode neighbourhood = NeighbourhoodMode::Valid;
  std::vector<std::uint32_t> robust_successes;   // successes in the neighbourhood
  std::vector<std::uint32_t> robust_neighbours;  // neighbourhood size
  std::vector<double> robustness;

  std::size_t valid_count() const { return poses.size(); }
  std::size_t success_count() const {
    return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(),
                                                  [](const GraspLabel& l) { return l.success; }));
  }
  bool has_robustness() const { return !poses.empty() && robustness.size() == poses.size(); }

  std::vector<Pose> successes() const {
    std::vector<Pose> out;
    for (std::size_t i = 0; i < poses.size(); ++i)
      if (labels[i].success) out.push_back(poses[i]);
    return out;
  }
};

struct ReferenceOptions {
  unsigned jobs = 1;
  std::uint64_t max_enumerated = 0;  // 0: unlimited
  std::function<void(std::uint64_t done, std::uint64_t total)> progress;
};

/// Default grid bounds: every gripper position that can touch the object.
inline Aabb reference_bounds(const TriMesh& mesh, const GripperSpec& gripper) {
  return mesh.aabb().dilated(gripper.finger_length + gripper.palm_box.z());
}

/// Radius of the smallest origin-centred ball holding the gripper hull.
inline double gripper_reach(const GripperSpec& gripper) {
  const GripperGeometry geo(Pose{}, gripper);
  const Vec3 c = geo.hull.center;
  return c.norm() + geo.hull.half_extents.norm();
}

inline double point_aabb_distance(const Vec3& p, const Aabb& box) {
  const Vec3 gap = (box.min - p).cwiseMax(p - box.max).cwiseMax(0.0);
  return gap.norm();
}

/// Enumerates and labels every grid pose. Lattice points farther from the
/// object than the gripper reaches are skipped wholesale (all their poses
/// have an empty closing region). Results are merged in grid order, so the
/// output does not depend on `jobs`.
inline ReferenceSet generate_reference(const TriMesh& mesh, const GripperSpec& gripper,
                                       const GridSpec& grid_spec, double mu,
                                       const ReferenceOptions& options = {}) {
  gripper.validate();
  friction_half_angle(mu);
  const Se3Grid grid(grid_spec);
  if (options.max_enumerated > 0 && grid.size() > options.max_enumerated)
    throw Error(ErrorCode::BudgetExceeded, "grid has " + std::to_string(grid.size()) +
                                               " poses, budget is " +
                                               std::to_string(options.max_enumerated));

  ReferenceSet ref;
  ref.grid = grid_spec;
  ref.gripper = gripper;
  ref.mu = mu;
  ref.enumerated = grid.size();

  const double reach = gripper_reach(gripper) + 1e-6;
  const std::uint64_t n_lattice = grid.lattice_size();
  const std::uint64_t n_rot = grid.orientations().size();
  struct Chunk {
    std::vector<Pose> poses;
    std::vector<std::uint64_t> index;
    std::vector<GraspLabel> labels;
  };
  std::vector<Chunk> chunks(n_lattice);
  std::atomic<std::uint64_t> next{0};
  std::atomic<std::uint64_t> done{0};

  auto worker = [&] {
    for (std::uint64_t t = next++; t < n_lattice; t = next++) {
      const Vec3 p = grid.lattice_point(t);
      Chunk& chunk = chunks[t];
      if (point_aabb_distance(p, mesh.aabb()) <= reach) {
        for (std::uint64_t r = 0; r < n_rot; ++r) {
          Pose pose;
          pose.p = p;
          pose.q = grid.orientations()[r];
          const Validity v = check_validity(mesh, pose, gripper);
          if (v != Validity::Valid) continue;
          chunk.poses.push_back(pose);
          chunk.index.push_back(t * n_rot + r);
          chunk.labels.push_back(label_valid_grasp(mesh, pose, gripper, mu));
        }
      }
      const std::uint64_t d = ++done;
      if (options.progress && (d % 256 == 0 || d == n_lattice)) options.progress(d * n_rot, grid.size());
    }
  };
  const unsigned jobs = std::max(1u, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  for (Chunk& c : chunks) {
    ref.poses.insert(ref.poses.end(), c.poses.begin(), c.poses.end());
    ref.grid_index.insert(ref.grid_index.end(), c.index.begin(), c.index.end());
    ref.labels.insert(ref.labels.end(), c.labels.begin(), c.labels.end());
  }
  return ref;
}

}  // namespace graspcov
