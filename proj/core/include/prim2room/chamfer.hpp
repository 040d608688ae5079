#pragma once

// Symmetric truncated Chamfer distance: the registration objective.
// loss = 0.5 * ( mean_src min(||s - nn_tgt(s)||^2, trunc^2)
//              + mean_tgt min(||t - nn_src(t)||^2, trunc^2) ).

#include <vector>

#include "prim2room/geometry.hpp"
#include "prim2room/kdtree.hpp"

namespace p2r {

double truncated_chamfer(std::span<const Vec3> src, std::span<const Vec3> tgt, double trunc);

/// PointCloud convenience overload (positions only).
double truncated_chamfer(const PointCloud& src, const PointCloud& tgt, double trunc);

/// Loss plus its gradient with respect to the source points, with
/// correspondences fixed at the current configuration. Pairs past the
/// truncation radius contribute zero gradient. `tgt_tree` must be built over
/// `tgt`.
double truncated_chamfer_grad(std::span<const Vec3> src, std::span<const Vec3> tgt,
                              const KdTree3& tgt_tree, double trunc,
                              std::vector<Vec3>& grad_src);

}  // namespace p2r
