#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "asmforge/geometry.hpp"

namespace asmforge {

// Static 3D k-d tree for exact nearest-neighbor queries. Results match a
// brute-force scan bit for bit: squared distances use the same expression
// and equal distances resolve to the lowest point index.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  Neighbor nearest(const Vec3& query) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    std::size_t begin = 0;
    std::size_t end = 0;
    int axis = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t begin, std::size_t end);
  void search(int node, const Vec3& query, Neighbor& best) const;

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace asmforge
