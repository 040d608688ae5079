#pragma once

// Closed-form scale-shift alignment of estimated depth to condition depth:
// least squares over the jointly valid mask of gamma * est + beta ~= cond.

#include "prim2room/geometry.hpp"

namespace p2r {

struct AffineDepthParams {
  double gamma = 1.0;  // scale
  double beta = 0.0;   // shift, meters
};

/// gamma = cov(est, cond) / var(est), beta = mean(cond) - gamma * mean(est).
/// Throws InsufficientOverlapError (< 2 joint pixels) or DegenerateFitError
/// (var(est) < 1e-12 or fitted gamma <= 0).
AffineDepthParams fit_scale_shift(const DepthMap& est, const DepthMap& cond);

/// Degenerate fits fall back to gamma = 1, beta = mean(cond) - mean(est).
AffineDepthParams fit_scale_shift_or_fallback(const DepthMap& est, const DepthMap& cond);

/// gamma * d + beta per valid pixel; results <= 0 become invalid.
DepthMap apply_affine(const DepthMap& depth, const AffineDepthParams& p);

}  // namespace p2r
