#include "prim2room/depth_align.hpp"

#include "prim2room/errors.hpp"

namespace p2r {

namespace {

struct JointStats {
  double mean_est = 0.0;
  double mean_cond = 0.0;
  double var_est = 0.0;
  double cov = 0.0;
  size_t n = 0;
};

JointStats joint_stats(const DepthMap& est, const DepthMap& cond) {
  if (!est.same_resolution(cond))
    throw DimensionError("fit_scale_shift: depth maps must share one resolution");
  JointStats s;
  double sum_e = 0.0, sum_c = 0.0;
  for (int y = 0; y < est.height(); ++y)
    for (int x = 0; x < est.width(); ++x) {
      if (!est.is_valid(x, y) || !cond.is_valid(x, y)) continue;
      sum_e += est.at(x, y);
      sum_c += cond.at(x, y);
      ++s.n;
    }
  if (s.n < 2) throw InsufficientOverlapError("fit_scale_shift: fewer than 2 joint pixels");
  s.mean_est = sum_e / double(s.n);
  s.mean_cond = sum_c / double(s.n);
  double var_e = 0.0, cov = 0.0;
  for (int y = 0; y < est.height(); ++y)
    for (int x = 0; x < est.width(); ++x) {
      if (!est.is_valid(x, y) || !cond.is_valid(x, y)) continue;
      const double de = est.at(x, y) - s.mean_est;
      const double dc = cond.at(x, y) - s.mean_cond;
      var_e += de * de;
      cov += de * dc;
    }
  s.var_est = var_e / double(s.n);
  s.cov = cov / double(s.n);
  return s;
}

}  // namespace

AffineDepthParams fit_scale_shift(const DepthMap& est, const DepthMap& cond) {
  const JointStats s = joint_stats(est, cond);
  if (s.var_est < 1e-12)
    throw DegenerateFitError("fit_scale_shift: estimated depth has (near-)zero variance");
  AffineDepthParams p;
  p.gamma = s.cov / s.var_est;
  p.beta = s.mean_cond - p.gamma * s.mean_est;
  if (!(p.gamma > 0.0)) throw DegenerateFitError("fit_scale_shift: non-positive scale");
  return p;
}

AffineDepthParams fit_scale_shift_or_fallback(const DepthMap& est, const DepthMap& cond) {
  try {
    return fit_scale_shift(est, cond);
  } catch (const DegenerateFitError&) {
    const JointStats s = joint_stats(est, cond);
    return AffineDepthParams{1.0, s.mean_cond - s.mean_est};
  }
}

DepthMap apply_affine(const DepthMap& depth, const AffineDepthParams& p) {
  DepthMap out(depth.width(), depth.height());
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.is_valid(x, y)) continue;
      const double d = p.gamma * depth.at(x, y) + p.beta;
      if (d > 0.0) out.set(x, y, d);  // non-positive results stay invalid
    }
  return out;
}

}  // namespace p2r
