#pragma once

// Candidate grasp streams for the evaluated sampling families:
//
//   Uniform    pose uniform over the reachable box around the object
//   LineCom    evenly spaced positions on random lines through the centre of
//              mass, random orientation
//   Approach   surface point, direction within alpha of the normal, standoff
//              in [0, finger_length], approach vector within beta of the
//              direction, random roll
//   Antipodal  surface point, ray within alpha of the inward normal, farthest
//              exit point as second contact, gripper centred between the
//              contacts with random roll about the jaw axis and standoff in
//              [s_min, 0]
//
// Every stream attaches check_validity to each candidate and stops after the
// requested number of Valid candidates or when the attempt budget runs out.

#include "graspcov/core/error.hpp"
#include "graspcov/core/random.hpp"
#include "graspcov/gripper/gripper.hpp"
#include "graspcov/mesh/trimesh.hpp"
#include "graspcov/se3/sampling.hpp"

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

namespace graspcov {

enum class SamplerKind { Uniform, LineCom, Approach, Antipodal };

constexpr std::string_view to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::Uniform: return "uniform";
    case SamplerKind::LineCom: return "line_com";
    case SamplerKind::Approach: return "approach";
    case SamplerKind::Antipodal: return "antipodal";
  }
  return "?";
}

namespace detail {

// Short label for an angle: multiples of pi as "0", "pi", "pi2", "pi6", ...
inline std::string angle_label(double a) {
  if (a == 0.0) return "0";
  for (int den = 1; den <= 12; ++den) {
    for (int num = 1; num <= 2 * den; ++num) {
      if (std::abs(a - num * kPi / den) < 1e-9) {
        std::string s = (num == 1 ? "" : std::to_string(num)) + "pi";
        return den == 1 ? s : s + std::to_string(den);
      }
    }
  }
  std::ostringstream ss;
  ss << a;
  return ss.str();
}

}  // namespace detail

struct SamplerSpec {
  SamplerKind kind = SamplerKind::Uniform;
  double alpha = 0.0;  // rad; Approach: normal cone, Antipodal: ray cone
  double beta = 0.0;   // rad; Approach only: approach-vector cone
  double s_min = 0.0;  // mm, <= 0; Antipodal only
  std::uint64_t seed = 0;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= kPi) || !(beta >= 0.0 && beta <= kPi))
      throw Error(ErrorCode::InvalidArgument, "sampler cone angles must lie in [0, pi]");
    if (!(s_min <= 0.0)) throw Error(ErrorCode::InvalidArgument, "s_min must be <= 0");
  }

  /// Stable identifier used in file names and reports, e.g. "approach_0_pi2".
  std::string name() const {
    switch (kind) {
      case SamplerKind::Uniform: return "uniform";
      case SamplerKind::LineCom: return "line_com";
      case SamplerKind::Approach:
        return "approach_" + detail::angle_label(alpha) + "_" + detail::angle_label(beta);
      case SamplerKind::Antipodal: {
        std::string s = "antipodal_" + detail::angle_label(alpha);
        if (s_min != 0.0) s += "_smin" + detail::angle_label(-s_min);
        return s;
      }
    }
    return "?";
  }
};

/// The sampled parameters behind a candidate; fields not used by the
/// sampler kind stay NaN / zero.
struct SampleTrace {
  Vec3 anchor = Vec3::Zero();     // surface point (Approach, Antipodal) or line origin (LineCom)
  Vec3 normal = Vec3::Zero();     // outward normal at the anchor
  Vec3 direction = Vec3::Zero();  // Approach: standoff direction; Antipodal: ray; LineCom: line
  Vec3 approach = Vec3::Zero();   // Approach: approach vector (outward)
  Vec3 second_contact = Vec3::Zero();  // Antipodal only
  double standoff = std::numeric_limits<double>::quiet_NaN();
  double roll = std::numeric_limits<double>::quiet_NaN();
};

struct CandidateGrasp {
  Pose pose;
  Validity validity = Validity::EmptyClosingRegion;
  std::uint64_t attempt_index = 0;
  SampleTrace trace;
};

struct SamplerOptions {
  double line_spacing = 5.0;        // LineCom point spacing (mm)
  std::uint64_t max_attempts = 0;   // 0: max(1e6, 1000 n)
};

/// Box of gripper positions that can possibly touch the object: the mesh
/// AABB dilated by finger length plus palm depth.
inline Aabb reachable_bounds(const TriMesh& mesh, const GripperSpec& gripper) {
  return mesh.aabb().dilated(gripper.finger_length + gripper.palm_box.z());
}

/// Rotation taking the canonical (lateral, closing, approach) basis onto the
/// given world directions.
inline Mat3 gripper_rotation(const GripperSpec& gripper, const Vec3& closing, const Vec3& approach) {
  Mat3 world;
  world.col(0) = closing.cross(approach);
  world.col(1) = closing;
  world.col(2) = approach;
  return world * gripper.canonical_basis().transpose();
}

/// Approach-family pose: the finger base (palm face centre) sits at
/// anchor + standoff * direction and the hand moves along -approach_vec.
inline Pose approach_pose(const GripperSpec& gripper, const Vec3& anchor, const Vec3& direction,
                          const Vec3& approach_vec, double standoff, double roll) {
  const Vec3 z = -approach_vec;
  const auto [e1, e2] = orthonormal_basis(z);
  const Vec3 closing = std::cos(roll) * e1 + std::sin(roll) * e2;
  const Vec3 origin = anchor + standoff * direction - gripper.finger_length * approach_vec;
  return Pose(origin, gripper_rotation(gripper, closing, z));
}

/// Antipodal-family pose: grasp centre at the contact midpoint, jaw along
/// `closing`, rolled about it, pushed `-standoff` further along the approach
/// axis (standoff <= 0 moves the contacts deeper between the fingers).
inline Pose antipodal_pose(const GripperSpec& gripper, const Vec3& p1, const Vec3& p2, double roll,
                           double standoff) {
  const Vec3 closing = (p2 - p1).normalized();
  const auto [e1, e2] = orthonormal_basis(closing);
  const Vec3 approach = std::cos(roll) * e1 + std::sin(roll) * e2;
  const Vec3 origin = 0.5 * (p1 + p2) - standoff * approach;
  return Pose(origin, gripper_rotation(gripper, closing, approach));
}

class CandidateStream {
 public:
  CandidateStream(const TriMesh& mesh, const GripperSpec& gripper, SamplerSpec spec,
                  std::size_t n_valid, SamplerOptions options = {})
      : mesh_(&mesh),
        gripper_(gripper),
        spec_(spec),
        options_(options),
        target_(n_valid),
        bounds_(reachable_bounds(mesh, gripper)),
        rng_(make_rng(spec.seed, spec.name())) {
    spec_.validate();
    gripper_.validate();
    budget_ = options.max_attempts > 0
                  ? options.max_attempts
                  : std::max<std::uint64_t>(1'000'000, 1000 * static_cast<std::uint64_t>(n_valid));
  }

  /// Next candidate carrying a pose (of any validity), or nullopt once the
  /// requested number of Valid candidates was emitted or the attempt budget
  /// is spent.
  std::optional<CandidateGrasp> next() {
    while (valid_ < target_) {
      if (attempts_ >= budget_) {
        exhausted_ = true;
        return std::nullopt;
      }
      const std::uint64_t index = attempts_++;
      std::optional<CandidateGrasp> c = propose();
      if (!c) continue;
      c->attempt_index = index;
      c->validity = check_validity(*mesh_, c->pose, gripper_);
      if (c->validity == Validity::Valid) ++valid_;
      return c;
    }
    return std::nullopt;
  }

  /// Drains the stream and keeps only Valid candidates.
  std::vector<CandidateGrasp> collect_valid() {
    std::vector<CandidateGrasp> out;
    while (auto c = next()) {
      if (c->validity == Validity::Valid) out.push_back(std::move(*c));
    }
    return out;
  }

  std::uint64_t attempts() const { return attempts_; }
  std::uint64_t valid_count() const { return valid_; }
  std::uint64_t budget() const { return budget_; }
  bool exhausted() const { return exhausted_; }
  const SamplerSpec& spec() const { return spec_; }
  const Aabb& bounds() const { return bounds_; }

 private:
  std::optional<CandidateGrasp> propose() {
    switch (spec_.kind) {
      case SamplerKind::Uniform: return propose_uniform();
      case SamplerKind::LineCom: return propose_line();
      case SamplerKind::Approach: return propose_approach();
      case SamplerKind::Antipodal: return propose_antipodal();
    }
    return std::nullopt;
  }

  std::optional<CandidateGrasp> propose_uniform() {
    CandidateGrasp c;
    c.pose = sample_uniform_pose(bounds_, rng_);
    return c;
  }

  std::optional<CandidateGrasp> propose_line() {
    while (line_points_.empty()) refill_line();
    CandidateGrasp c;
    c.pose = Pose(line_points_.front(), random_rotation(rng_));
    line_points_.pop_front();
    c.trace.anchor = mesh_->com();
    c.trace.direction = line_dir_;
    return c;
  }

  void refill_line() {
    line_dir_ = random_unit_vector(rng_);
    const Vec3& o = mesh_->com();
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 3; ++i) {
      if (line_dir_[i] == 0.0) continue;
      double a = (bounds_.min[i] - o[i]) / line_dir_[i];
      double b = (bounds_.max[i] - o[i]) / line_dir_[i];
      if (a > b) std::swap(a, b);
      t0 = std::max(t0, a);
      t1 = std::min(t1, b);
    }
    const double step = options_.line_spacing;
    for (auto k = static_cast<long>(std::ceil(t0 / step)); k * step <= t1; ++k)
      line_points_.push_back(o + (k * step) * line_dir_);
  }

  std::optional<CandidateGrasp> propose_approach() {
    const SurfacePoint sp = sample_surface_point(*mesh_, rng_);
    const Vec3 dir = sample_cone(sp.normal, spec_.alpha, rng_);
    const double standoff = uniform(rng_, 0.0, gripper_.finger_length);
    const Vec3 approach = sample_cone(dir, spec_.beta, rng_);
    const double roll = uniform(rng_, 0.0, 2.0 * kPi);
    CandidateGrasp c;
    c.pose = approach_pose(gripper_, sp.position, dir, approach, standoff, roll);
    c.trace.anchor = sp.position;
    c.trace.normal = sp.normal;
    c.trace.direction = dir;
    c.trace.approach = approach;
    c.trace.standoff = standoff;
    c.trace.roll = roll;
    return c;
  }

  std::optional<CandidateGrasp> propose_antipodal() {
    const SurfacePoint sp = sample_surface_point(*mesh_, rng_);
    const Vec3 ray = sample_cone(-sp.normal, spec_.alpha, rng_);
    const double roll = uniform(rng_, 0.0, 2.0 * kPi);
    const double standoff = spec_.s_min < 0.0 ? uniform(rng_, spec_.s_min, 0.0) : 0.0;
    const auto hit = raycast_farthest(*mesh_, sp.position, ray);
    if (!hit || hit->t > gripper_.max_opening) return std::nullopt;
    CandidateGrasp c;
    c.pose = antipodal_pose(gripper_, sp.position, hit->position, roll, standoff);
    c.trace.anchor = sp.position;
    c.trace.normal = sp.normal;
    c.trace.direction = ray;
    c.trace.second_contact = hit->position;
    c.trace.standoff = standoff;
    c.trace.roll = roll;
    return c;
  }

  const TriMesh* mesh_;
  GripperSpec gripper_;
  SamplerSpec spec_;
  SamplerOptions options_;
  std::size_t target_;
  Aabb bounds_;
  Rng rng_;
  std::uint64_t budget_ = 0;
  std::uint64_t attempts_ = 0;
  std::uint64_t valid_ = 0;
  bool exhausted_ = false;
  std::deque<Vec3> line_points_;
  Vec3 line_dir_ = Vec3::UnitX();
};

namespace detail {
inline CandidateStream make_stream(SamplerKind expected, const TriMesh& mesh,
                                   const GripperSpec& gripper, const SamplerSpec& spec,
                                   std::size_t n, SamplerOptions options) {
  if (spec.kind != expected)
    throw Error(ErrorCode::InvalidArgument, "sampler spec kind " + std::string(to_string(spec.kind)) +
                                                " passed to " + std::string(to_string(expected)) +
                                                " sampler");
  return CandidateStream(mesh, gripper, spec, n, options);
}
}  // namespace detail

inline CandidateStream sample_uniform(const TriMesh& mesh, const GripperSpec& gripper,
                                      const SamplerSpec& spec, std::size_t n,
                                      SamplerOptions options = {}) {
  return detail::make_stream(SamplerKind::Uniform, mesh, gripper, spec, n, options);
}

inline CandidateStream sample_line_com(const TriMesh& mesh, const GripperSpec& gripper,
                                       const SamplerSpec& spec, std::size_t n,
                                       SamplerOptions options = {}) {
  return detail::make_stream(SamplerKind::LineCom, mesh, gripper, spec, n, options);
}

inline CandidateStream sample_approach(const TriMesh& mesh, const GripperSpec& gripper,
                                       const SamplerSpec& spec, std::size_t n,
                                       SamplerOptions options = {}) {
  return detail::make_stream(SamplerKind::Approach, mesh, gripper, spec, n, options);
}

inline CandidateStream sample_antipodal(const TriMesh& mesh, const GripperSpec& gripper,
                                        const SamplerSpec& spec, std::size_t n,
                                        SamplerOptions options = {}) {
  return detail::make_stream(SamplerKind::Antipodal, mesh, gripper, spec, n, options);
}

}  // namespace graspcov
