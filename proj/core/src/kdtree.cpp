#include "prim2room/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace p2r {

void KdTree3::build(std::span<const Vec3> points) {
  points_.assign(points.begin(), points.end());
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.clear();
  nodes_.reserve(points_.empty() ? 0 : 2 * points_.size() / kLeafSize + 4);
  root_ = points_.empty() ? -1 : build_range(0, int(points_.size()));
}

int KdTree3::build_range(int begin, int end) {
  const int node_index = int(nodes_.size());
  nodes_.push_back({});
  Node& node = nodes_.back();
  node.begin = begin;
  node.end = end;
  if (end - begin <= kLeafSize) return node_index;

  Vec3 lo = points_[order_[begin]], hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] - lo[axis] < 1e-15) return node_index;  // all points coincide: stay a leaf

  const int mid = (begin + end) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](int a, int b) {
                     if (points_[a][axis] != points_[b][axis])
                       return points_[a][axis] < points_[b][axis];
                     return a < b;  // stable tie order keeps builds deterministic
                   });
  // Re-read through nodes_ after the recursive calls: they may reallocate.
  const double split = points_[order_[mid]][axis];
  const int left = build_range(begin, mid);
  const int right = build_range(mid, end);
  nodes_[node_index].axis = axis;
  nodes_[node_index].split = split;
  nodes_[node_index].left = left;
  nodes_[node_index].right = right;
  return node_index;
}

KdTree3::Hit KdTree3::nearest(const Vec3& query) const {
  Hit best;
  if (root_ >= 0) search(root_, query, best);
  return best;
}

void KdTree3::search(int node_index, const Vec3& q, Hit& best) const {
  const Node& node = nodes_[node_index];
  if (node.left < 0) {
    for (int i = node.begin; i < node.end; ++i) {
      const int p = order_[i];
      const double d = (points_[p] - q).squaredNorm();
      if (d < best.sq_dist || (d == best.sq_dist && p < best.index)) {
        best.sq_dist = d;
        best.index = p;
      }
    }
    return;
  }
  const double delta = q[node.axis] - node.split;
  const int near = delta < 0.0 ? node.left : node.right;
  const int far = delta < 0.0 ? node.right : node.left;
  search(near, q, best);
  if (delta * delta < best.sq_dist) search(far, q, best);
}

}  // namespace p2r
