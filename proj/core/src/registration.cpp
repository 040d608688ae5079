#include "prim2room/registration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "prim2room/chamfer.hpp"
#include "prim2room/errors.hpp"
#include "prim2room/kdtree.hpp"
#include "prim2room/rng.hpp"

namespace p2r {

namespace {

struct NormalizeInfo {
  Vec3 center = Vec3::Zero();
  double scale = 1.0;  // world -> unit cube

  Vec3 to_cube(const Vec3& p) const { return (p - center) * scale; }
  Vec3 to_world(const Vec3& p) const { return p / scale + center; }
};

NormalizeInfo compute_normalization(const PointCloud& src, std::span<const PointCloud> targets) {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  auto grow = [&](const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  };
  for (const Vec3& p : src.points) grow(p);
  for (const PointCloud& t : targets)
    for (const Vec3& p : t.points) grow(p);
  NormalizeInfo info;
  info.center = (lo + hi) / 2.0;
  const double extent = (hi - lo).maxCoeff();
  info.scale = extent > 1e-12 ? 1.0 / extent : 1.0;
  return info;
}

// Deterministic partial Fisher-Yates subsample (sorted output order).
std::vector<int> subsample_indices(size_t n, size_t max_count, uint64_t seed) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (n <= max_count) return idx;
  std::mt19937_64 rng = make_rng(seed);
  for (size_t i = 0; i < max_count; ++i) {
    std::uniform_int_distribution<size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(max_count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

RegistrationResult register_depth(const DepthMap& est_aligned, const Camera& cam,
                                  std::span<const PointCloud> targets, WarpMode mode,
                                  const RegistrationParams& params, uint64_t seed) {
  if (est_aligned.valid_count() == 0)
    throw ValidationError("register_depth: estimated depth has no valid pixels");
  bool any_target = false;
  for (const PointCloud& t : targets) any_target |= !t.empty();
  if (!any_target) throw ValidationError("register_depth: all targets are empty");

  const int w = est_aligned.width(), h = est_aligned.height();
  const PointCloud src = unproject(est_aligned, cam);

  // Pixels for which at least one target provides condition depth.
  std::vector<uint8_t> covered(size_t(w) * h, 0);
  for (const PointCloud& t : targets)
    for (const Vec2i& px : t.pixels)
      if (px.x() >= 0 && px.x() < w && px.y() >= 0 && px.y() < h)
        covered[size_t(px.y()) * w + px.x()] = 1;

  std::vector<int> covered_src;  // indices into src
  for (size_t i = 0; i < src.size(); ++i) {
    const Vec2i& px = src.pixels[i];
    if (covered[size_t(px.y()) * w + px.x()]) covered_src.push_back(int(i));
  }

  RegistrationResult result;
  result.mode = mode;
  if (covered_src.empty()) {
    result.warped = est_aligned;
    result.no_op = true;
    result.provenance.assign(size_t(w) * h, Vec2i(-1, -1));
    for (size_t i = 0; i < src.size(); ++i)
      result.provenance[size_t(src.pixels[i].y()) * w + src.pixels[i].x()] = src.pixels[i];
    return result;
  }

  // The source and target clouds are pixel-aligned (rendered from the same
  // camera), so the optimization subsample picks a pixel subset once and
  // restricts both sides to it. This keeps exact correspondences available
  // at any sample size.
  const std::vector<int> sel =
      subsample_indices(covered_src.size(), size_t(params.max_points), mix_seed(seed, 0x5e1ec7));
  std::vector<uint8_t> in_subset(size_t(w) * h, 0);
  const int n_opt = int(sel.size());

  const NormalizeInfo norm = compute_normalization(src, targets);
  Eigen::MatrixXd opt_pts(n_opt, 3), opt_rays(n_opt, 3);
  for (int i = 0; i < n_opt; ++i) {
    const int si = covered_src[size_t(sel[i])];
    const Vec3 p = norm.to_cube(src.points[si]);
    opt_pts.row(i) = p.transpose();
    opt_rays.row(i) = src.rays[si].transpose();
    const Vec2i& px = src.pixels[si];
    in_subset[size_t(px.y()) * w + px.x()] = 1;
  }

  std::vector<Vec3> tgt_pts;
  for (const PointCloud& t : targets)
    for (size_t i = 0; i < t.size(); ++i) {
      const Vec2i& px = t.pixels[i];
      if (px.x() >= 0 && px.x() < w && px.y() >= 0 && px.y() < h &&
          in_subset[size_t(px.y()) * w + px.x()])
        tgt_pts.push_back(norm.to_cube(t.points[i]));
    }
  if (tgt_pts.empty()) throw ValidationError("register_depth: target subsample is empty");
  const KdTree3 tgt_tree(tgt_pts);

  const double trunc_n = params.trunc * norm.scale;
  const double delta_max_n = params.delta_max * norm.scale;

  std::vector<WarpLevel> levels;
  levels.reserve(size_t(params.levels));
  Eigen::MatrixXd base = opt_pts;
  std::vector<Vec3> warped_vec(size_t(n_opt), Vec3::Zero());
  std::vector<Vec3> grad_pts;
  for (int k = 0; k < params.levels; ++k) {
    WarpLevel level(mode, k, params.hidden_width, params.init_sigma, delta_max_n,
                    mix_seed(seed, uint64_t(k) + 1));
    AdamOptimizer adam(level.param_count(), params.learning_rate);
    Eigen::VectorXd best_theta = level.params();
    double best_loss = std::numeric_limits<double>::infinity();
    std::vector<double> history;
    history.reserve(size_t(params.max_iterations));
    int iterations = 0;

    for (int it = 0; it < params.max_iterations; ++it) {
      const Eigen::MatrixXd warped = level.forward(base, opt_rays);
      for (int i = 0; i < n_opt; ++i) warped_vec[size_t(i)] = warped.row(i).transpose();
      const double loss = truncated_chamfer_grad(warped_vec, tgt_pts, tgt_tree, trunc_n, grad_pts);
      if (!std::isfinite(loss))
        throw OptimizationError("register_depth: non-finite loss at level " + std::to_string(k), k);
      if (loss < best_loss) {
        best_loss = loss;
        best_theta = level.params();
      }
      history.push_back(loss);
      iterations = it + 1;
      if (it >= params.break_window) {
        const double then = history[size_t(it - params.break_window)];
        if ((then - loss) < params.rel_break * std::max(std::abs(then), 1e-12)) break;
      }
      Eigen::MatrixXd d_warped(n_opt, 3);
      for (int i = 0; i < n_opt; ++i) d_warped.row(i) = grad_pts[size_t(i)].transpose();
      level.zero_grad();
      level.backward(d_warped);
      adam.step(level.params(), level.grads());
    }

    level.params() = best_theta;  // keep the best iterate of this level
    base = level.forward(base, opt_rays);
    result.level_loss.push_back(best_loss);
    result.level_iterations.push_back(iterations);
    levels.push_back(std::move(level));
  }

  // Apply the frozen composed field to every valid source pixel (covered or
  // not: the MLPs extrapolate smoothly) and re-project to depth.
  const size_t n_full = src.size();
  Eigen::MatrixXd full_pts(n_full, 3), full_rays(n_full, 3);
  for (size_t i = 0; i < n_full; ++i) {
    full_pts.row(i) = norm.to_cube(src.points[i]).transpose();
    full_rays.row(i) = src.rays[i].transpose();
  }
  for (WarpLevel& level : levels) full_pts = level.forward(full_pts, full_rays);

  result.warped = DepthMap(w, h);
  result.provenance.assign(size_t(w) * h, Vec2i(-1, -1));
  const RigidTransform cam_from_world = cam.pose.inverse();

  if (mode == WarpMode::ndr) {
    for (size_t i = 0; i < n_full; ++i) {
      const Vec3 world = norm.to_world(full_pts.row(i).transpose());
      const double z = cam_from_world.apply(world).z();
      const Vec2i& px = src.pixels[i];
      result.warped.set(px.x(), px.y(), std::max(z, 1e-4));
      result.provenance[size_t(px.y()) * w + px.x()] = px;
    }
  } else {
    // Splat: nearest pixel, z-min wins; source pixels that receive no splat
    // keep their own point's depth so the valid mask is preserved.
    std::vector<double> splat(size_t(w) * h, std::numeric_limits<double>::infinity());
    std::vector<Vec2i> splat_src(size_t(w) * h, Vec2i(-1, -1));
    std::vector<double> own_depth(n_full, 0.0);
    for (size_t i = 0; i < n_full; ++i) {
      const Vec3 world = norm.to_world(full_pts.row(i).transpose());
      const Vec3 in_cam = cam_from_world.apply(world);
      own_depth[i] = std::max(in_cam.z(), 1e-4);
      if (in_cam.z() <= 0.0) continue;
      const int lx = int(std::lround(cam.fx * in_cam.x() / in_cam.z() + cam.cx));
      const int ly = int(std::lround(cam.fy * in_cam.y() / in_cam.z() + cam.cy));
      if (lx < 0 || lx >= w || ly < 0 || ly >= h) continue;
      if (!est_aligned.is_valid(lx, ly)) continue;  // mask equality: never add pixels
      const size_t li = size_t(ly) * w + lx;
      if (in_cam.z() < splat[li]) {
        splat[li] = in_cam.z();
        splat_src[li] = src.pixels[i];
      }
    }
    for (size_t i = 0; i < n_full; ++i) {
      const Vec2i& px = src.pixels[i];
      const size_t pi = size_t(px.y()) * w + px.x();
      if (std::isfinite(splat[pi])) {
        result.warped.set(px.x(), px.y(), splat[pi]);
        result.provenance[pi] = splat_src[pi];
      } else {
        result.warped.set(px.x(), px.y(), own_depth[i]);
        result.provenance[pi] = px;
      }
    }
  }
  return result;
}

}  // namespace p2r
