#pragma once

// Non-rigid registration of aligned estimated depth to the condition
// targets. The source cloud (restricted to condition-covered pixels) is
// fitted level by level through the deformation pyramid against the union
// of target clouds under the symmetric truncated Chamfer loss; each level is
// frozen and composed before the next. The composed field then warps every
// valid source pixel and is re-projected to depth: exact pixel identity in
// NDR mode, nearest-pixel z-min splat in NDP mode.

#include <vector>

#include "prim2room/geometry.hpp"
#include "prim2room/warp.hpp"

namespace p2r {

struct RegistrationParams {
  int levels = 6;
  int hidden_width = 64;
  int max_iterations = 300;     // per level
  double learning_rate = 0.01;
  double rel_break = 1e-4;      // early break when relative improvement over
  int break_window = 20;        //   break_window iterations drops below rel_break
  double trunc = 0.3;           // Chamfer truncation, meters (world units)
  double delta_max = 0.5;       // NDR ray-step bound, meters (world units)
  double init_sigma = 1e-4;
  int max_points = 4096;        // optimization subsample (per covered-pixel set)
};

struct RegistrationResult {
  DepthMap warped;
  /// Source pixel whose point produced each output pixel's depth. Identity
  /// in NDR mode; in NDP mode the z-min splat winner. (-1,-1) on invalid
  /// pixels.
  std::vector<Vec2i> provenance;
  std::vector<double> level_loss;  // Chamfer at the end of each level
  std::vector<int> level_iterations;
  WarpMode mode = WarpMode::ndr;
  bool no_op = false;  // no condition overlap: input returned unchanged

  const Vec2i& provenance_at(int x, int y) const {
    return provenance[size_t(y) * warped.width() + x];
  }
};

/// Throws OptimizationError (with the level index) on a non-finite loss, and
/// ValidationError when preconditions are violated. Returns the input
/// unchanged (no_op) when no target covers any valid source pixel.
RegistrationResult register_depth(const DepthMap& est_aligned, const Camera& cam,
                                  std::span<const PointCloud> targets, WarpMode mode,
                                  const RegistrationParams& params, uint64_t seed);

}  // namespace p2r
