#pragma once

// Coverage of a reference set R by sampled grasps X under pose_distance:
//
//   cov1(X, R, eps) = |{g in R : min_x rho(x, g) <= eps}| / |R|
//   cov2(X, R)      = exp(-max_g min_x rho(x, g))
//   cov3(X, R)      = exp(-mean_g min_x rho(x, g))
//
// All three derive from the per-reference nearest distances, so callers that
// need several of them (or several eps) compute nearest_distances once.

#include "graspcov/core/error.hpp"
#include "graspcov/metrics/pose_index.hpp"
#include "graspcov/oracle/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <span>
#include <thread>
#include <vector>

namespace graspcov {

/// min_x rho(x, g) for every g in `reference`; +inf when X is empty.
inline std::vector<double> nearest_distances(const PoseIndex& samples, std::span<const Pose> reference,
                                             unsigned jobs = 1) {
  std::vector<double> out(reference.size(), std::numeric_limits<double>::infinity());
  if (samples.empty()) return out;
  if (jobs <= 1 || reference.size() < 1024) {
    for (std::size_t i = 0; i < reference.size(); ++i) out[i] = samples.nearest(reference[i]).distance;
    return out;
  }
  std::atomic<std::size_t> next{0};
  constexpr std::size_t kBlock = 256;
  auto worker = [&] {
    for (std::size_t b = next.fetch_add(kBlock); b < reference.size(); b = next.fetch_add(kBlock)) {
      const std::size_t e = std::min(reference.size(), b + kBlock);
      for (std::size_t i = b; i < e; ++i) out[i] = samples.nearest(reference[i]).distance;
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
  return out;
}

inline void require_reference(std::span<const double> distances) {
  if (distances.empty()) throw Error(ErrorCode::EmptyReference, "coverage needs a nonempty reference set");
}

inline double cov1_from_distances(std::span<const double> distances, double eps) {
  require_reference(distances);
  if (!(eps >= 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be >= 0");
  const auto hit = std::count_if(distances.begin(), distances.end(), [&](double d) { return d <= eps; });
  return static_cast<double>(hit) / static_cast<double>(distances.size());
}

inline void require_samples(std::span<const double> distances) {
  for (double d : distances)
    if (std::isinf(d)) throw Error(ErrorCode::EmptyInput, "cov2/cov3 need a nonempty sample set");
}

inline double cov2_from_distances(std::span<const double> distances) {
  require_reference(distances);
  require_samples(distances);
  return std::exp(-*std::max_element(distances.begin(), distances.end()));
}

inline double cov3_from_distances(std::span<const double> distances) {
  require_reference(distances);
  require_samples(distances);
  double sum = 0.0;
  for (double d : distances) sum += d;
  return std::exp(-sum / static_cast<double>(distances.size()));
}

inline double cov1(std::span<const Pose> samples, std::span<const Pose> reference, double eps,
                   const MetricParams& params = {}) {
  if (reference.empty()) throw Error(ErrorCode::EmptyReference, "coverage needs a nonempty reference set");
  const PoseIndex index(samples, params);
  return cov1_from_distances(nearest_distances(index, reference), eps);
}

inline double cov2(std::span<const Pose> samples, std::span<const Pose> reference,
                   const MetricParams& params = {}) {
  if (reference.empty()) throw Error(ErrorCode::EmptyReference, "coverage needs a nonempty reference set");
  const PoseIndex index(samples, params);
  return cov2_from_distances(nearest_distances(index, reference));
}

inline double cov3(std::span<const Pose> samples, std::span<const Pose> reference,
                   const MetricParams& params = {}) {
  if (reference.empty()) throw Error(ErrorCode::EmptyReference, "coverage needs a nonempty reference set");
  const PoseIndex index(samples, params);
  return cov3_from_distances(nearest_distances(index, reference));
}

/// successes / denominator; NaN when the denominator is 0.
inline double precision(std::uint64_t successes, std::uint64_t denominator) {
  if (denominator == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(successes) / static_cast<double>(denominator);
}

/// Fraction of Valid labels that succeed. Throws NoValidSamples when none is
/// Valid.
inline double precision(std::span<const GraspLabel> labels) {
  std::uint64_t valid = 0, ok = 0;
  for (const GraspLabel& l : labels) {
    if (!l.valid()) continue;
    ++valid;
    if (l.success) ++ok;
  }
  if (valid == 0) throw Error(ErrorCode::NoValidSamples, "precision needs at least one Valid sample");
  return precision(ok, valid);
}

/// Robustness of every Valid reference grasp: the fraction of successes among
/// reference grasps within eps of it (itself included). The neighbourhood is
/// taken over Valid grasps, or over every enumerated grid pose (invalid ones
/// counting as failures).
inline void label_robustness(ReferenceSet& ref, double eps,
                             NeighbourhoodMode mode = NeighbourhoodMode::Valid) {
  if (!(eps >= 0.0)) throw Error(ErrorCode::InvalidArgument, "robustness eps must be >= 0");
  const MetricParams params(ref.omega);
  const std::vector<Pose> succ = ref.successes();
  const PoseIndex success_index(succ, params);
  const std::size_t n = ref.poses.size();
  ref.robust_successes.assign(n, 0);
  ref.robust_neighbours.assign(n, 0);
  ref.robustness.assign(n, 0.0);

  if (mode == NeighbourhoodMode::Valid) {
    const PoseIndex valid_index(ref.poses, params);
    for (std::size_t i = 0; i < n; ++i) {
      ref.robust_successes[i] = static_cast<std::uint32_t>(success_index.count_within(ref.poses[i], eps));
      ref.robust_neighbours[i] = static_cast<std::uint32_t>(valid_index.count_within(ref.poses[i], eps));
    }
  } else {
    // Grid poses within eps of a grid pose: lattice offsets within eps/omega
    // combined with orientations whose angle fits the remaining budget.
    const Se3Grid grid(ref.grid);
    const auto& rots = grid.orientations();
    std::vector<Pose> rot_poses;
    rot_poses.reserve(rots.size());
    for (const Quat& q : rots) rot_poses.emplace_back(Vec3::Zero(), q);
    const PoseIndex rot_index(rot_poses, params);
    const auto dims = grid.lattice_dims();
    const double step = ref.grid.translation_step;
    const auto reach = static_cast<long>(std::floor(eps / (params.omega * step))) + 1;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t t = ref.grid_index[i] / rots.size();
      const long iz = static_cast<long>(t % dims[2]);
      const long iy = static_cast<long>((t / dims[2]) % dims[1]);
      const long ix = static_cast<long>(t / (dims[2] * dims[1]));
      const Pose& g = ref.poses[i];
      std::uint64_t count = 0;
      for (long a = std::max(0L, ix - reach); a <= std::min<long>(dims[0] - 1, ix + reach); ++a)
        for (long b = std::max(0L, iy - reach); b <= std::min<long>(dims[1] - 1, iy + reach); ++b)
          for (long c = std::max(0L, iz - reach); c <= std::min<long>(dims[2] - 1, iz + reach); ++c) {
            const Vec3 p = ref.grid.bounds.min + step * Vec3(static_cast<double>(a), static_cast<double>(b),
                                                              static_cast<double>(c));
            const double dt = params.omega * (g.p - p).norm();
            if (dt > eps) continue;
            rot_index.visit_within(Pose(Vec3::Zero(), g.q), eps - dt + 1e-12, [&](std::size_t r, double) {
              if (pose_distance(g, Pose{p, rots[r]}, params) <= eps) ++count;
            });
          }
      ref.robust_successes[i] = static_cast<std::uint32_t>(success_index.count_within(g, eps));
      ref.robust_neighbours[i] = static_cast<std::uint32_t>(count);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    ref.robustness[i] = ref.robust_neighbours[i] == 0
                            ? 0.0
                            : static_cast<double>(ref.robust_successes[i]) / ref.robust_neighbours[i];
  }
  ref.robustness_eps = eps;
  ref.neighbourhood = mode;
}

/// Successful reference grasps with robustness >= gamma.
inline std::vector<Pose> robust_filter(const ReferenceSet& ref, double gamma) {
  if (!ref.has_robustness())
    throw Error(ErrorCode::MissingRobustness, "reference set has no robustness labels");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be in [0, 1]");
  std::vector<Pose> out;
  for (std::size_t i = 0; i < ref.poses.size(); ++i)
    if (ref.labels[i].success && ref.robustness[i] >= gamma) out.push_back(ref.poses[i]);
  return out;
}

enum class CoverageKind { Cov1, Cov2, Cov3 };

/// cov_i(X, robust_filter(R, gamma)); throws EmptyReference if the filter
/// keeps nothing.
inline double robust_coverage(std::span<const Pose> samples, const ReferenceSet& ref, double gamma,
                              CoverageKind kind, double eps = 0.109) {
  const std::vector<Pose> robust = robust_filter(ref, gamma);
  if (robust.empty())
    throw Error(ErrorCode::EmptyReference, "no successful grasp has robustness >= " + std::to_string(gamma));
  const PoseIndex index(samples, MetricParams(ref.omega));
  const std::vector<double> d = nearest_distances(index, robust);
  switch (kind) {
    case CoverageKind::Cov1: return cov1_from_distances(d, eps);
    case CoverageKind::Cov2: return cov2_from_distances(d);
    case CoverageKind::Cov3: return cov3_from_distances(d);
  }
  return 0.0;
}

}  // namespace graspcov
