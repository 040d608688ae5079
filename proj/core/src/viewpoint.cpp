#include "prim2room/viewpoint.hpp"

#include <algorithm>
#include <cmath>

#include "prim2room/rasterizer.hpp"

namespace p2r {

Camera camera_from(const Intrinsics& intr, const Vec3& position, const Vec3& look_at) {
  return look_at_camera(position, look_at, intr.fx, intr.fy, intr.cx, intr.cy, intr.width,
                        intr.height);
}

void ObservedSet::add(int32_t instance, std::span<const int32_t> triangles,
                      size_t triangle_count) {
  auto& flags = seen_[instance];
  if (flags.size() < triangle_count) flags.resize(triangle_count, 0);
  for (int32_t t : triangles)
    if (t >= 0 && size_t(t) < flags.size()) flags[size_t(t)] = 1;
}

bool ObservedSet::contains(int32_t instance, int32_t triangle) const {
  auto it = seen_.find(instance);
  if (it == seen_.end()) return false;
  return triangle >= 0 && size_t(triangle) < it->second.size() && it->second[size_t(triangle)];
}

size_t ObservedSet::count(int32_t instance) const {
  auto it = seen_.find(instance);
  if (it == seen_.end()) return 0;
  size_t n = 0;
  for (uint8_t f : it->second) n += f;
  return n;
}

namespace {

// Everything about one candidate view that does not depend on the observed
// set; computed once and reused across greedy iterations.
struct ViewAnalysis {
  std::vector<int32_t> visible;  // target triangle IDs
  double s_iou = 0.0;
  double s_norm = 0.0;
};

double rect_iou(double ax0, double ay0, double ax1, double ay1, double bx0, double by0,
                double bx1, double by1) {
  const double ix = std::max(0.0, std::min(ax1, bx1) - std::max(ax0, bx0));
  const double iy = std::max(0.0, std::min(ay1, by1) - std::max(ay0, by0));
  const double inter = ix * iy;
  const double area_a = std::max(0.0, ax1 - ax0) * std::max(0.0, ay1 - ay0);
  const double area_b = std::max(0.0, bx1 - bx0) * std::max(0.0, by1 - by0);
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

ViewAnalysis analyze_view(const Camera& cam, const ConditionScene& scene, size_t target_index,
                          const ScoreWeights& weights) {
  if (weights.margin < 0 || weights.margin >= std::min(cam.width, cam.height) / 2)
    throw ValidationError("score_view: margin out of [0, min(w,h)/2)");
  const PrimitiveInstance& target = scene.instances[target_index];
  ViewAnalysis va;

  const RenderMaps maps = render_scene(scene, cam);
  std::vector<uint8_t> seen(target.mesh.triangle_count(), 0);
  double norm_sum = 0.0;
  size_t norm_count = 0;
  const Vec3 origin = cam.origin();
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const PrimRef& ref = maps.prim_at(x, y);
      if (!ref.valid() || ref.instance != int32_t(target_index)) continue;
      seen[size_t(ref.triangle)] = 1;
      const double z = maps.depth.at(x, y);
      const Vec3 cam_pt(z * (x - cam.cx) / cam.fx, z * (y - cam.cy) / cam.fy, z);
      const Vec3 ray = (cam.pose.apply(cam_pt) - origin).normalized();
      norm_sum += std::max(0.0, maps.normal_at(x, y).dot(-ray));
      ++norm_count;
    }
  }
  for (size_t t = 0; t < seen.size(); ++t)
    if (seen[t]) va.visible.push_back(int32_t(t));
  va.s_norm = norm_count > 0 ? norm_sum / double(norm_count) : 0.0;

  // Framing IoU from projected mesh vertices (stable under partial
  // occlusion), clipped to the image bounds.
  double px0 = std::numeric_limits<double>::infinity(), py0 = px0;
  double px1 = -px0, py1 = -px0;
  bool any_in_front = false;
  for (const Vec3& p : target.mesh.positions) {
    const Projection pr = project(p, cam);
    if (!pr.in_front) continue;
    any_in_front = true;
    px0 = std::min(px0, pr.u);
    px1 = std::max(px1, pr.u);
    py0 = std::min(py0, pr.v);
    py1 = std::max(py1, pr.v);
  }
  if (any_in_front) {
    px0 = std::max(px0, 0.0);
    py0 = std::max(py0, 0.0);
    px1 = std::min(px1, double(cam.width));
    py1 = std::min(py1, double(cam.height));
    if (px1 > px0 && py1 > py0) {
      const double m = double(weights.margin);
      va.s_iou = rect_iou(px0, py0, px1, py1, m, m, double(cam.width) - m,
                          double(cam.height) - m);
    }
  }
  return va;
}

double new_area_fraction(const ViewAnalysis& va, const PrimitiveInstance& target,
                         int32_t instance, const ObservedSet& observed) {
  if (target.total_area <= 0.0) return 0.0;
  double new_area = 0.0;
  for (int32_t t : va.visible)
    if (!observed.contains(instance, t)) new_area += target.mesh.triangle_area(size_t(t));
  return new_area / target.total_area;
}

ViewScore assemble_score(const ViewAnalysis& va, double s_area, const ScoreWeights& weights) {
  ViewScore s;
  s.s_area = s_area;
  s.s_iou = va.s_iou;
  s.s_norm = va.s_norm;
  s.total = s.s_area + weights.w_iou * s.s_iou + weights.w_norm * s.s_norm;
  return s;
}

}  // namespace

std::vector<Camera> sample_candidates(const ConditionScene& scene,
                                      const PrimitiveInstance& target,
                                      const SamplingParams& params, const Intrinsics& intr) {
  if (!(scene.room.width > 0.0 && scene.room.depth > 0.0 && scene.room.height > 0.0))
    throw SelectionError("sample_candidates: empty room");
  const double step = params.grid_step;
  const double clear = params.wall_clearance;
  constexpr double kEps = 1e-9;
  const long kx0 = long(std::ceil(clear / step - kEps));
  const long kx1 = long(std::floor((scene.room.width - clear) / step + kEps));
  const long ky0 = long(std::ceil(clear / step - kEps));
  const long ky1 = long(std::floor((scene.room.depth - clear) / step + kEps));

  std::vector<Camera> cams;
  for (double height : params.heights) {
    if (height > scene.room.height - clear) continue;
    for (long ky = ky0; ky <= ky1; ++ky) {
      for (long kx = kx0; kx <= kx1; ++kx) {
        const Vec3 pos(double(kx) * step, double(ky) * step, height);
        bool blocked = false;
        for (const PrimitiveInstance& inst : scene.instances) {
          const Vec3 lo = inst.aabb_lo - Vec3::Constant(params.obstacle_inflation);
          const Vec3 hi = inst.aabb_hi + Vec3::Constant(params.obstacle_inflation);
          if (pos.x() > lo.x() && pos.x() < hi.x() && pos.y() > lo.y() && pos.y() < hi.y() &&
              pos.z() > lo.z() && pos.z() < hi.z()) {
            blocked = true;
            break;
          }
        }
        if (blocked) continue;
        if ((target.center - pos).norm() < 1e-9) continue;
        cams.push_back(camera_from(intr, pos, target.center));
      }
    }
  }
  if (cams.empty())
    throw SelectionError("sample_candidates: no free camera position in the room");
  return cams;
}

ViewScore score_view(const Camera& cam, const ConditionScene& scene, size_t target_index,
                     const ObservedSet& observed, const ScoreWeights& weights) {
  if (target_index >= scene.instances.size())
    throw ValidationError("score_view: target index out of range");
  const PrimitiveInstance& target = scene.instances[target_index];
  const ViewAnalysis va = analyze_view(cam, scene, target_index, weights);
  const double s_area = new_area_fraction(va, target, int32_t(target_index), observed);
  return assemble_score(va, s_area, weights);
}

SelectionResult select_viewpoints(const ConditionScene& scene, size_t target_index,
                                  const ScoreWeights& weights, const SelectionParams& params,
                                  const Intrinsics& intr) {
  if (target_index >= scene.instances.size())
    throw ValidationError("select_viewpoints: target index out of range");
  const PrimitiveInstance& target = scene.instances[target_index];
  const std::vector<Camera> candidates =
      sample_candidates(scene, target, params.sampling, intr);

  // The scene does not change during selection, so each candidate's render
  // (visible set, IoU, normal term) is computed once; only s_area depends on
  // the observed set.
  std::vector<ViewAnalysis> analyses;
  analyses.reserve(candidates.size());
  for (const Camera& cam : candidates)
    analyses.push_back(analyze_view(cam, scene, target_index, weights));

  SelectionResult result;
  result.stop = StopReason::max_views;
  const int32_t inst = int32_t(target_index);
  while (int(result.views.size()) < params.max_views) {
    int best = -1;
    ViewScore best_score;
    for (size_t c = 0; c < candidates.size(); ++c) {
      const double s_area = new_area_fraction(analyses[c], target, inst, result.observed);
      const ViewScore s = assemble_score(analyses[c], s_area, weights);
      if (best < 0 || s.total > best_score.total) {
        best = int(c);
        best_score = s;
      }
    }
    if (!result.views.empty() && best_score.s_area < params.tau_new) {
      result.stop = StopReason::coverage;
      break;
    }
    result.views.push_back(candidates[size_t(best)]);
    result.scores.push_back(best_score);
    result.observed.add(inst, analyses[size_t(best)].visible, target.mesh.triangle_count());
  }

  double observed_area = 0.0;
  for (size_t t = 0; t < target.mesh.triangle_count(); ++t)
    if (result.observed.contains(inst, int32_t(t))) observed_area += target.mesh.triangle_area(t);
  result.observed_area = observed_area;
  return result;
}

}  // namespace p2r
