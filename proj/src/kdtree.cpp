#include "asmforge/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace asmforge {

namespace {
constexpr std::size_t kLeafSize = 8;

inline bool better(double d, std::size_t idx, const Neighbor& best) {
  return d < best.sq_dist || (d == best.sq_dist && idx < best.index);
}
}  // namespace

KdTree::KdTree(std::span<const Vec3> points)
    : points_(points.begin(), points.end()), order_(points.size()) {
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, points_.size());
  }
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (std::size_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all points coincide

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[order_[mid]][axis];
  // Left holds coordinates <= split, right holds >= split.
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

Neighbor KdTree::nearest(const Vec3& query) const {
  Neighbor best{std::numeric_limits<std::size_t>::max(),
                std::numeric_limits<double>::infinity()};
  if (!nodes_.empty()) search(0, query, best);
  return best;
}

void KdTree::search(int node_id, const Vec3& query, Neighbor& best) const {
  const Node& node = nodes_[static_cast<std::size_t>(node_id)];
  if (node.axis < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      const double d = (query - points_[idx]).squaredNorm();
      if (better(d, idx, best)) best = {idx, d};
    }
    return;
  }
  const double diff = query[node.axis] - node.split;
  const int near = diff <= 0.0 ? node.left : node.right;
  const int far = diff <= 0.0 ? node.right : node.left;
  search(near, query, best);
  // Equal bound must still be visited: a tie on a lower index may live there.
  if (diff * diff <= best.sq_dist) search(far, query, best);
}

}  // namespace asmforge
