#pragma once

// Minimal 3D k-d tree for nearest-neighbor queries over point arrays.
// Median split along the widest axis; query order is deterministic.

#include <vector>

#include "prim2room/geometry.hpp"

namespace p2r {

class KdTree3 {
 public:
  KdTree3() = default;
  explicit KdTree3(std::span<const Vec3> points) { build(points); }

  void build(std::span<const Vec3> points);

  struct Hit {
    int index = -1;
    double sq_dist = std::numeric_limits<double>::infinity();
  };

  /// Nearest point to `query`; index -1 when the tree is empty.
  Hit nearest(const Vec3& query) const;

  size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

 private:
  struct Node {
    int left = -1;
    int right = -1;
    int begin = 0;   // leaf range into order_
    int end = 0;
    int axis = 0;
    double split = 0.0;
  };

  int build_range(int begin, int end);
  void search(int node, const Vec3& q, Hit& best) const;

  std::vector<Vec3> points_;
  std::vector<int> order_;
  std::vector<Node> nodes_;
  int root_ = -1;
  static constexpr int kLeafSize = 16;
};

}  // namespace p2r
