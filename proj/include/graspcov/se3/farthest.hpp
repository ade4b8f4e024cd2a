#pragma once

#include "graspcov/core/error.hpp"
#include "graspcov/se3/pose.hpp"

#include <limits>
#include <span>
#include <vector>

namespace graspcov {

/// Greedy max-min (farthest point) selection under pose_distance, starting
/// from `seed_index`. Returns indices into `poses` in selection order. Ties
/// are broken towards the lower index.
inline std::vector<std::size_t> farthest_point_indices(std::span<const Pose> poses, std::size_t k,
                                                       const MetricParams& params,
                                                       std::size_t seed_index = 0) {
  if (k < 1 || k > poses.size())
    throw Error(ErrorCode::InvalidK, "k=" + std::to_string(k) + " must be in [1, " +
                                         std::to_string(poses.size()) + "]");
  if (seed_index >= poses.size())
    throw Error(ErrorCode::InvalidArgument, "seed index out of range");

  std::vector<double> min_dist(poses.size(), std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(poses.size(), false);
  std::vector<std::size_t> out;
  out.reserve(k);
  std::size_t current = seed_index;
  while (true) {
    out.push_back(current);
    chosen[current] = true;
    if (out.size() == k) break;
    std::size_t next = poses.size();
    double best = -1.0;
    for (std::size_t i = 0; i < poses.size(); ++i) {
      if (chosen[i]) continue;
      min_dist[i] = std::min(min_dist[i], pose_distance(poses[i], poses[current], params));
      if (min_dist[i] > best) {
        best = min_dist[i];
        next = i;
      }
    }
    current = next;
  }
  return out;
}

inline std::vector<Pose> farthest_point_subset(std::span<const Pose> poses, std::size_t k,
                                               const MetricParams& params,
                                               std::size_t seed_index = 0) {
  std::vector<Pose> out;
  for (std::size_t i : farthest_point_indices(poses, k, params, seed_index)) out.push_back(poses[i]);
  return out;
}

}  // namespace graspcov
