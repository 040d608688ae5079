#include "prim2room/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "prim2room/errors.hpp"

namespace p2r {

size_t PartialRender::mask_count() const {
  size_t n = 0;
  for (uint8_t m : inpaint_mask) n += m ? 1 : 0;
  return n;
}

PartialRender render_partial(const SceneMesh& mesh, const Camera& cam) {
  PartialRender out;
  if (mesh.empty()) {
    out.color = ColorMap(cam.width, cam.height);
    out.depth = DepthMap(cam.width, cam.height);
    out.semantic = SemanticMap(cam.width, cam.height);
    out.inpaint_mask.assign(size_t(cam.width) * cam.height, 1);
    return out;
  }
  RenderMaps maps = render_mesh(mesh.mesh, cam);
  out.color = std::move(maps.color);
  out.depth = std::move(maps.depth);
  out.semantic = std::move(maps.semantic);
  out.inpaint_mask.assign(size_t(cam.width) * cam.height, 0);
  for (int y = 0; y < cam.height; ++y)
    for (int x = 0; x < cam.width; ++x)
      if (!out.depth.is_valid(x, y)) out.inpaint_mask[size_t(y) * cam.width + x] = 1;
  return out;
}

namespace {

enum class PixelKind : uint8_t { none = 0, fresh = 1, seam_new = 2, seam_snap = 3 };

struct FuseGrid {
  int w = 0, h = 0;
  std::vector<PixelKind> kind;
  std::vector<Vec3> position;
  std::vector<Eigen::Vector3f> color;
  std::vector<uint16_t> semantic;
  std::vector<int> vertex;  // -1 until materialized

  bool fuseable(int x, int y) const {
    return x >= 0 && x < w && y >= 0 && y < h && kind[size_t(y) * w + x] != PixelKind::none;
  }
  size_t idx(int x, int y) const { return size_t(y) * w + x; }
};

double median_of(std::vector<double>& values) {
  const size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + long(mid), values.end());
  return values[mid];
}

}  // namespace

SceneMesh fuse(const SceneMesh& mesh, const ColorMap& color, const DepthMap& warped_depth,
               const std::vector<Vec2i>& provenance, const SemanticMap& condition_semantic,
               const Camera& cam, const std::vector<uint8_t>& inpaint_mask, StagePolicy policy,
               const FusionConfig& cfg, FuseStats* stats) {
  const int w = cam.width, h = cam.height;
  if (color.width() != w || color.height() != h || warped_depth.width() != w ||
      warped_depth.height() != h || condition_semantic.width() != w ||
      condition_semantic.height() != h || inpaint_mask.size() != size_t(w) * h)
    throw DimensionError("fuse: maps must match the camera resolution");
  if (!provenance.empty() && provenance.size() != size_t(w) * h)
    throw DimensionError("fuse: provenance size mismatch");

  FuseStats local_stats;
  SceneMesh out = mesh;
  const size_t mask_count =
      size_t(std::count(inpaint_mask.begin(), inpaint_mask.end(), uint8_t(1)));
  if (mask_count == 0) {
    if (stats) *stats = local_stats;
    return out;
  }

  const PartialRender existing = render_partial(mesh, cam);

  auto unproject_px = [&](int x, int y, double z) {
    const Vec3 cam_pt(z * (x - cam.cx) / cam.fx, z * (y - cam.cy) / cam.fy, z);
    return cam.pose.apply(cam_pt);
  };

  FuseGrid grid;
  grid.w = w;
  grid.h = h;
  grid.kind.assign(size_t(w) * h, PixelKind::none);
  grid.position.assign(size_t(w) * h, Vec3::Zero());
  grid.color.assign(size_t(w) * h, Eigen::Vector3f::Zero());
  grid.semantic.assign(size_t(w) * h, 0);
  grid.vertex.assign(size_t(w) * h, -1);

  auto masked = [&](int x, int y) {
    return x >= 0 && x < w && y >= 0 && y < h && inpaint_mask[size_t(y) * w + x];
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!warped_depth.is_valid(x, y)) continue;
      const size_t i = grid.idx(x, y);
      PixelKind kind = PixelKind::none;
      if (inpaint_mask[i]) {
        kind = PixelKind::fresh;
      } else if (existing.depth.is_valid(x, y)) {
        bool border = false;
        for (int dy = -1; dy <= 1 && !border; ++dy)
          for (int dx = -1; dx <= 1 && !border; ++dx)
            if ((dx | dy) != 0 && masked(x + dx, y + dy)) border = true;
        if (!border) continue;
        kind = std::abs(existing.depth.at(x, y) - warped_depth.at(x, y)) <= cfg.seam_tol
                   ? PixelKind::seam_snap
                   : PixelKind::seam_new;
      } else {
        continue;
      }

      grid.kind[i] = kind;
      if (kind == PixelKind::seam_snap) {
        // Reuse the existing surface point and its attributes.
        grid.position[i] = unproject_px(x, y, existing.depth.at(x, y));
        grid.color[i] = existing.color.at(x, y);
        grid.semantic[i] = existing.semantic.at(x, y);
      } else {
        grid.position[i] = unproject_px(x, y, warped_depth.at(x, y));
        grid.color[i] = color.at(x, y);
        const Vec2i src = provenance.empty() ? Vec2i(x, y) : provenance[i];
        grid.semantic[i] =
            (src.x() >= 0) ? condition_semantic.at(src.x(), src.y()) : condition_semantic.at(x, y);
      }
    }
  }

  // Local step lengths (horizontal/vertical edges between fuseable pixels)
  // feed the stretched-edge filter's neighborhood median.
  constexpr double kNoStep = -1.0;
  std::vector<double> hstep(size_t(w) * h, kNoStep), vstep(size_t(w) * h, kNoStep);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!grid.fuseable(x, y)) continue;
      const size_t i = grid.idx(x, y);
      if (grid.fuseable(x + 1, y)) hstep[i] = (grid.position[grid.idx(x + 1, y)] - grid.position[i]).norm();
      if (grid.fuseable(x, y + 1)) vstep[i] = (grid.position[grid.idx(x, y + 1)] - grid.position[i]).norm();
    }

  const double cos_grazing = std::cos(cfg.grazing_deg * M_PI / 180.0);
  const Vec3 cam_origin = cam.origin();

  auto materialize = [&](int x, int y) {
    const size_t i = grid.idx(x, y);
    if (grid.vertex[i] >= 0) return grid.vertex[i];
    uint8_t stage = uint8_t(StageTag::background);
    if (policy == StagePolicy::by_semantic && !is_background_category(grid.semantic[i]))
      stage = uint8_t(StageTag::foreground);
    const int v = out.mesh.add_vertex(grid.position[i], grid.color[i], grid.semantic[i]);
    out.stage.push_back(stage);
    grid.vertex[i] = v;
    ++local_stats.vertices_added;
    return v;
  };

  std::vector<double> steps;
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      if (!(grid.fuseable(x, y) && grid.fuseable(x + 1, y) && grid.fuseable(x, y + 1) &&
            grid.fuseable(x + 1, y + 1)))
        continue;

      steps.clear();
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          const size_t ni = grid.idx(nx, ny);
          if (hstep[ni] > 0.0) steps.push_back(hstep[ni]);
          if (vstep[ni] > 0.0) steps.push_back(vstep[ni]);
        }
      const double max_edge =
          steps.size() >= 3 ? cfg.edge_factor * median_of(steps)
                            : std::numeric_limits<double>::infinity();

      const Vec3& pa = grid.position[grid.idx(x, y)];
      const Vec3& pb = grid.position[grid.idx(x + 1, y)];
      const Vec3& pc = grid.position[grid.idx(x, y + 1)];
      const Vec3& pd = grid.position[grid.idx(x + 1, y + 1)];

      struct Candidate {
        int ax, ay, bx, by, cx, cy;
        const Vec3 *a, *b, *c;
      };
      // Winding: normals face the camera.
      const Candidate cands[2] = {
          {x, y, x, y + 1, x + 1, y, &pa, &pc, &pb},
          {x + 1, y, x, y + 1, x + 1, y + 1, &pb, &pc, &pd},
      };
      for (const Candidate& cand : cands) {
        const double e0 = (*cand.b - *cand.a).norm();
        const double e1 = (*cand.c - *cand.b).norm();
        const double e2 = (*cand.a - *cand.c).norm();
        if (e0 > max_edge || e1 > max_edge || e2 > max_edge) {
          ++local_stats.triangles_filtered;
          continue;
        }
        Vec3 n = (*cand.b - *cand.a).cross(*cand.c - *cand.a);
        const double len = n.norm();
        if (len < 1e-15) {
          ++local_stats.triangles_filtered;
          continue;
        }
        n /= len;
        const Vec3 centroid = (*cand.a + *cand.b + *cand.c) / 3.0;
        const Vec3 view = (centroid - cam_origin).normalized();
        if (std::abs(n.dot(view)) < cos_grazing) {
          ++local_stats.triangles_filtered;
          continue;
        }
        const int va = materialize(cand.ax, cand.ay);
        const int vb = materialize(cand.bx, cand.by);
        const int vc = materialize(cand.cx, cand.cy);
        out.mesh.add_triangle(va, vb, vc);
        ++local_stats.triangles_added;
      }
    }
  }

  if (stats) *stats = local_stats;
  return out;
}

SceneMesh remove_background(const SceneMesh& mesh) {
  SceneMesh out;
  std::vector<int> remap(mesh.mesh.vertex_count(), -1);
  for (size_t v = 0; v < mesh.mesh.vertex_count(); ++v) {
    if (is_background_category(mesh.mesh.semantics[v])) continue;
    remap[v] = out.mesh.add_vertex(mesh.mesh.positions[v], mesh.mesh.colors[v],
                                   mesh.mesh.semantics[v]);
    out.stage.push_back(mesh.stage[v]);
  }
  for (const auto& t : mesh.mesh.triangles) {
    if (remap[t[0]] < 0 || remap[t[1]] < 0 || remap[t[2]] < 0) continue;
    out.mesh.add_triangle(remap[t[0]], remap[t[1]], remap[t[2]]);
  }
  return out;
}

std::vector<Camera> background_trajectory(const RoomDims& room, const BackgroundRingParams& params,
                                          const Intrinsics& intr) {
  if (!(room.width > 0.0 && room.depth > 0.0 && room.height > 0.0))
    throw ValidationError("background_trajectory: invalid room");
  const Vec3 pivot(room.width / 2.0, room.depth / 2.0, params.height);
  std::vector<Camera> cams;
  cams.reserve(size_t(2 * params.yaw_steps + 2));
  auto add_pose = [&](double yaw_deg, double pitch_deg) {
    const double yaw = yaw_deg * M_PI / 180.0;
    const double pitch = pitch_deg * M_PI / 180.0;
    const Vec3 forward(std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw),
                       std::sin(pitch));
    cams.push_back(camera_from(intr, pivot, pivot + forward));
  };
  const double step = 360.0 / params.yaw_steps;
  for (int k = 0; k < params.yaw_steps; ++k) add_pose(k * step, params.pitch_down_deg);
  for (int k = 0; k < params.yaw_steps; ++k) add_pose(k * step, params.pitch_up_deg);
  cams.push_back(camera_from(intr, pivot, pivot + Vec3(0, 0, -1)));  // straight down
  cams.push_back(camera_from(intr, pivot, pivot + Vec3(0, 0, 1)));   // straight up
  return cams;
}

}  // namespace p2r
