#pragma once

// Exact nearest-neighbour and range queries under pose_distance.
//
// Poses are embedded in R^7 as (omega * p, q). A node's bounding box in that
// space gives a lower bound on the distance to anything inside it:
//
//   omega * |p - box_t|  +  2 asin(min(|q - box_q|, |-q - box_q|) / 2)
//
// where the quaternion term takes the nearer of q and -q, since q and -q are
// the same rotation. Pruning uses that bound with a small slack, so results
// match brute force, including the tie-break towards the lowest index.

#include "graspcov/core/error.hpp"
#include "graspcov/se3/pose.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace graspcov {

class PoseIndex {
 public:
  struct Neighbor {
    std::size_t index = 0;
    double distance = std::numeric_limits<double>::infinity();
  };

  explicit PoseIndex(std::span<const Pose> poses, MetricParams params = {}, std::size_t leaf_size = 8)
      : params_(params), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    const std::size_t n = poses.size();
    poses_.assign(poses.begin(), poses.end());
    ids_.resize(n);
    std::iota(ids_.begin(), ids_.end(), std::size_t{0});
    points_.resize(n);
    for (std::size_t i = 0; i < n; ++i) points_[i] = embed(poses[i]);
    if (n > 0) {
      nodes_.reserve(2 * n / leaf_size_ + 2);
      build(0, n);
    }
    // Store poses in tree order for locality.
    std::vector<Pose> ordered(n);
    std::vector<Point> ordered_pts(n);
    for (std::size_t i = 0; i < n; ++i) {
      ordered[i] = poses[ids_[i]];
      ordered_pts[i] = points_[ids_[i]];
    }
    poses_ = std::move(ordered);
    points_ = std::move(ordered_pts);
  }

  std::size_t size() const { return poses_.size(); }
  bool empty() const { return poses_.empty(); }
  const MetricParams& params() const { return params_; }

  /// Closest stored pose (lowest original index on ties).
  Neighbor nearest(const Pose& query) const {
    if (empty()) throw Error(ErrorCode::EmptyInput, "nearest query on an empty pose index");
    const Query q = make_query(query);
    Neighbor best;
    best.index = std::numeric_limits<std::size_t>::max();
    nearest_rec(0, q, query, best);
    return best;
  }

  /// Original indices of all stored poses with distance <= radius, ascending.
  std::vector<std::size_t> within(const Pose& query, double radius) const {
    std::vector<std::size_t> out;
    visit_within(query, radius, [&](std::size_t i, double) { out.push_back(i); });
    std::sort(out.begin(), out.end());
    return out;
  }

  std::size_t count_within(const Pose& query, double radius) const {
    std::size_t n = 0;
    visit_within(query, radius, [&](std::size_t, double) { ++n; });
    return n;
  }

  /// Calls fn(original_index, distance) for every pose within radius, in
  /// unspecified order.
  template <class Fn>
  void visit_within(const Pose& query, double radius, Fn&& fn) const {
    if (empty() || !(radius >= 0.0)) return;
    const Query q = make_query(query);
    within_rec(0, q, query, radius, fn);
  }

 private:
  using Point = std::array<double, 7>;

  struct Node {
    Point lo;
    Point hi;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  struct Query {
    Point pos;  // embedding of the query
    Point neg;  // embedding with the quaternion negated
  };

  static constexpr double kSlack = 1e-12;

  Point embed(const Pose& p) const {
    return {params_.omega * p.p.x(), params_.omega * p.p.y(), params_.omega * p.p.z(),
            p.q.w(), p.q.x(), p.q.y(), p.q.z()};
  }

  Query make_query(const Pose& p) const {
    Query q;
    q.pos = embed(p);
    q.neg = q.pos;
    for (int d = 3; d < 7; ++d) q.neg[d] = -q.neg[d];
    return q;
  }

  std::int32_t build(std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.emplace_back();
    Node node;
    node.begin = static_cast<std::uint32_t>(begin);
    node.end = static_cast<std::uint32_t>(end);
    node.lo.fill(std::numeric_limits<double>::infinity());
    node.hi.fill(-std::numeric_limits<double>::infinity());
    for (std::size_t i = begin; i < end; ++i) {
      const Point& p = points_[ids_[i]];
      for (int d = 0; d < 7; ++d) {
        node.lo[d] = std::min(node.lo[d], p[d]);
        node.hi[d] = std::max(node.hi[d], p[d]);
      }
    }
    if (end - begin > leaf_size_) {
      int axis = 0;
      double spread = -1.0;
      for (int d = 0; d < 7; ++d) {
        if (node.hi[d] - node.lo[d] > spread) {
          spread = node.hi[d] - node.lo[d];
          axis = d;
        }
      }
      if (spread > 0.0) {
        const std::size_t mid = begin + (end - begin) / 2;
        // Sort positions [begin, end) by coordinate, moving ids alongside.
        std::vector<std::size_t> order(end - begin);
        std::iota(order.begin(), order.end(), begin);
        std::nth_element(order.begin(), order.begin() + (mid - begin), order.end(),
                         [&](std::size_t a, std::size_t b) {
                           const double va = points_[ids_[a]][axis];
                           const double vb = points_[ids_[b]][axis];
                           return va < vb || (va == vb && ids_[a] < ids_[b]);
                         });
        std::vector<std::size_t> ids(end - begin);
        for (std::size_t k = 0; k < order.size(); ++k) ids[k] = ids_[order[k]];
        std::copy(ids.begin(), ids.end(), ids_.begin() + static_cast<std::ptrdiff_t>(begin));
        node.left = build(begin, mid);
        node.right = build(mid, end);
      }
    }
    nodes_[static_cast<std::size_t>(id)] = node;
    return id;
  }

  static double quat_gap2(const Point& q, const Node& n) {
    double s = 0.0;
    for (int d = 3; d < 7; ++d) {
      const double g = std::max({0.0, n.lo[d] - q[d], q[d] - n.hi[d]});
      s += g * g;
    }
    return s;
  }

  static double lower_bound(const Query& q, const Node& n) {
    double t2 = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double g = std::max({0.0, n.lo[d] - q.pos[d], q.pos[d] - n.hi[d]});
      t2 += g * g;
    }
    const double c2 = std::min(quat_gap2(q.pos, n), quat_gap2(q.neg, n));
    const double half_chord = std::min(1.0, 0.5 * std::sqrt(c2));
    return std::sqrt(t2) + 2.0 * std::asin(half_chord);
  }

  static bool prunable(double bound, double limit) {
    return bound > limit + kSlack * (1.0 + limit);
  }

  void nearest_rec(std::int32_t id, const Query& q, const Pose& query, Neighbor& best) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const double d = pose_distance(query, poses_[i], params_);
        if (d < best.distance || (d == best.distance && ids_[i] < best.index)) best = {ids_[i], d};
      }
      return;
    }
    const Node& a = nodes_[static_cast<std::size_t>(n.left)];
    const Node& b = nodes_[static_cast<std::size_t>(n.right)];
    const double la = lower_bound(q, a);
    const double lb = lower_bound(q, b);
    if (la <= lb) {
      if (!prunable(la, best.distance)) nearest_rec(n.left, q, query, best);
      if (!prunable(lb, best.distance)) nearest_rec(n.right, q, query, best);
    } else {
      if (!prunable(lb, best.distance)) nearest_rec(n.right, q, query, best);
      if (!prunable(la, best.distance)) nearest_rec(n.left, q, query, best);
    }
  }

  template <class Fn>
  void within_rec(std::int32_t id, const Query& q, const Pose& query, double radius, Fn& fn) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (prunable(lower_bound(q, n), radius)) return;
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const double d = pose_distance(query, poses_[i], params_);
        if (d <= radius) fn(ids_[i], d);
      }
      return;
    }
    within_rec(n.left, q, query, radius, fn);
    within_rec(n.right, q, query, radius, fn);
  }

  MetricParams params_;
  std::size_t leaf_size_;
  std::vector<Pose> poses_;
  std::vector<std::size_t> ids_;
  std::vector<Point> points_;
  std::vector<Node> nodes_;
};

/// PoseIndex over a nonempty pose set.
inline PoseIndex build_index(std::span<const Pose> poses, MetricParams params = {}) {
  if (poses.empty()) throw Error(ErrorCode::EmptyInput, "cannot index an empty pose set");
  return PoseIndex(poses, params);
}

}  // namespace graspcov
