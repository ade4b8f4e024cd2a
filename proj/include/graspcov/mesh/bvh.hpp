#pragma once

#include "graspcov/core/types.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

namespace graspcov {

// Bounding volume hierarchy over a set of primitive boxes. Median split on
// the longest centroid axis; leaves hold at most `kLeafSize` primitives.
// Node boxes are padded slightly so traversal is conservative with respect
// to the exact primitive tests.
class Bvh {
 public:
  struct Node {
    Aabb box;
    std::uint32_t first = 0;  // leaf: first index into order(); inner: left child
    std::uint32_t count = 0;  // leaf: primitive count; inner: 0
    std::uint32_t right = 0;  // inner: right child
    bool leaf() const { return count > 0; }
  };

  static constexpr std::uint32_t kLeafSize = 4;

  Bvh() = default;

  explicit Bvh(std::span<const Aabb> prim_boxes) {
    const std::size_t n = prim_boxes.size();
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0u);
    if (n == 0) return;
    std::vector<Vec3> centroids(n);
    double scale = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      centroids[i] = prim_boxes[i].center();
      scale = std::max(scale, prim_boxes[i].max.cwiseAbs().maxCoeff());
      scale = std::max(scale, prim_boxes[i].min.cwiseAbs().maxCoeff());
    }
    pad_ = 1e-9 * scale;
    nodes_.reserve(2 * n);
    build(prim_boxes, centroids, 0, static_cast<std::uint32_t>(n));
  }

  bool empty() const { return nodes_.empty(); }
  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<std::uint32_t>& order() const { return order_; }

  // Visits every leaf primitive whose ancestors all pass `node_test`.
  // `visit(prim)` returns false to stop early.
  template <class NodeTest, class Visit>
  void traverse(NodeTest&& node_test, Visit&& visit) const {
    if (nodes_.empty()) return;
    std::uint32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (!node_test(node.box)) continue;
      if (node.leaf()) {
        for (std::uint32_t k = 0; k < node.count; ++k) {
          if (!visit(order_[node.first + k])) return;
        }
      } else {
        stack[top++] = node.right;
        stack[top++] = node.first;
      }
    }
  }

 private:
  std::uint32_t build(std::span<const Aabb> boxes, const std::vector<Vec3>& centroids,
                      std::uint32_t begin, std::uint32_t end) {
    const auto index = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Aabb box;
    Aabb cbox;
    for (std::uint32_t i = begin; i < end; ++i) {
      box.expand(boxes[order_[i]]);
      cbox.expand(centroids[order_[i]]);
    }
    box = box.dilated(pad_);

    if (end - begin <= kLeafSize) {
      nodes_[index].box = box;
      nodes_[index].first = begin;
      nodes_[index].count = end - begin;
      return index;
    }

    int axis = 0;
    cbox.extents().maxCoeff(&axis);
    const std::uint32_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       if (centroids[a][axis] != centroids[b][axis])
                         return centroids[a][axis] < centroids[b][axis];
                       return a < b;
                     });
    const std::uint32_t left = build(boxes, centroids, begin, mid);
    const std::uint32_t right = build(boxes, centroids, mid, end);
    nodes_[index].box = box;
    nodes_[index].first = left;
    nodes_[index].count = 0;
    nodes_[index].right = right;
    return index;
  }

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
  double pad_ = 1e-9;
};

}  // namespace graspcov
