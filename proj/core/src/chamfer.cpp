#include "prim2room/chamfer.hpp"

#include "prim2room/errors.hpp"

namespace p2r {

double truncated_chamfer(std::span<const Vec3> src, std::span<const Vec3> tgt, double trunc) {
  if (src.empty() || tgt.empty()) throw ValidationError("truncated_chamfer: empty point cloud");
  const double trunc_sq = trunc * trunc;
  const KdTree3 src_tree(src);
  const KdTree3 tgt_tree(tgt);
  double sum_src = 0.0;
  for (const Vec3& p : src) sum_src += std::min(tgt_tree.nearest(p).sq_dist, trunc_sq);
  double sum_tgt = 0.0;
  for (const Vec3& p : tgt) sum_tgt += std::min(src_tree.nearest(p).sq_dist, trunc_sq);
  return 0.5 * (sum_src / double(src.size()) + sum_tgt / double(tgt.size()));
}

double truncated_chamfer(const PointCloud& src, const PointCloud& tgt, double trunc) {
  return truncated_chamfer(std::span<const Vec3>(src.points), std::span<const Vec3>(tgt.points),
                           trunc);
}

double truncated_chamfer_grad(std::span<const Vec3> src, std::span<const Vec3> tgt,
                              const KdTree3& tgt_tree, double trunc,
                              std::vector<Vec3>& grad_src) {
  if (src.empty() || tgt.empty()) throw ValidationError("truncated_chamfer: empty point cloud");
  const double trunc_sq = trunc * trunc;
  grad_src.assign(src.size(), Vec3::Zero());

  const double inv_ns = 1.0 / double(src.size());
  double sum_src = 0.0;
  for (size_t i = 0; i < src.size(); ++i) {
    const KdTree3::Hit hit = tgt_tree.nearest(src[i]);
    if (hit.sq_dist < trunc_sq) {
      sum_src += hit.sq_dist;
      grad_src[i] += inv_ns * (src[i] - tgt[size_t(hit.index)]);
    } else {
      sum_src += trunc_sq;
    }
  }

  const KdTree3 src_tree(src);
  const double inv_nt = 1.0 / double(tgt.size());
  double sum_tgt = 0.0;
  for (const Vec3& t : tgt) {
    const KdTree3::Hit hit = src_tree.nearest(t);
    if (hit.sq_dist < trunc_sq) {
      sum_tgt += hit.sq_dist;
      grad_src[size_t(hit.index)] += inv_nt * (src[size_t(hit.index)] - t);
    } else {
      sum_tgt += trunc_sq;
    }
  }
  return 0.5 * (sum_src * inv_ns + sum_tgt * inv_nt);
}

}  // namespace p2r
