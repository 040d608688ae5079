#include "prim2room/rasterizer.hpp"

#include <algorithm>
#include <cmath>

namespace p2r {

namespace {

constexpr double kNearPlane = 1e-4;  // camera-frame z clip

struct ClipVertex {
  Vec3 cam;                 // camera-frame position
  Eigen::Vector3f color;
};

// Clips a camera-frame triangle against z >= kNearPlane. Returns 0, 3 or 4
// vertices (convex polygon, original winding preserved).
int clip_near(const ClipVertex in[3], ClipVertex out[4]) {
  int n = 0;
  for (int i = 0; i < 3; ++i) {
    const ClipVertex& a = in[i];
    const ClipVertex& b = in[(i + 1) % 3];
    const bool a_in = a.cam.z() >= kNearPlane;
    const bool b_in = b.cam.z() >= kNearPlane;
    if (a_in) out[n++] = a;
    if (a_in != b_in) {
      const double t = (kNearPlane - a.cam.z()) / (b.cam.z() - a.cam.z());
      ClipVertex v;
      v.cam = a.cam + t * (b.cam - a.cam);
      v.color = a.color + float(t) * (b.color - a.color);
      out[n++] = v;
    }
  }
  return n;
}

struct Framebuffer {
  int w = 0, h = 0;
  std::vector<double> depth;       // +inf = empty
  std::vector<uint16_t> semantic;
  std::vector<Eigen::Vector3f> color;
  std::vector<Vec3> normal;
  std::vector<PrimRef> prim;
};

void raster_triangle(Framebuffer& fb, const Camera& cam, const ClipVertex v[3],
                     const Vec3& world_normal, uint16_t semantic, const PrimRef& ref) {
  // Project to continuous pixel coordinates.
  double u[3], vv[3], iz[3];
  for (int k = 0; k < 3; ++k) {
    const double z = v[k].cam.z();
    u[k] = cam.fx * v[k].cam.x() / z + cam.cx;
    vv[k] = cam.fy * v[k].cam.y() / z + cam.cy;
    iz[k] = 1.0 / z;
  }

  const double area =
      (u[1] - u[0]) * (vv[2] - vv[0]) - (vv[1] - vv[0]) * (u[2] - u[0]);
  if (std::abs(area) < 1e-12) return;  // degenerate in screen space
  const double inv_area = 1.0 / area;

  int x0 = int(std::ceil(std::min({u[0], u[1], u[2]})));
  int x1 = int(std::floor(std::max({u[0], u[1], u[2]})));
  int y0 = int(std::ceil(std::min({vv[0], vv[1], vv[2]})));
  int y1 = int(std::floor(std::max({vv[0], vv[1], vv[2]})));
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, fb.w - 1);
  y1 = std::min(y1, fb.h - 1);
  if (x0 > x1 || y0 > y1) return;

  for (int y = y0; y <= y1; ++y) {
    const double py = double(y);
    for (int x = x0; x <= x1; ++x) {
      const double px = double(x);
      // Barycentric coordinates via signed edge areas (sign-normalized so
      // both windings rasterize).
      double w0 = ((u[1] - px) * (vv[2] - py) - (vv[1] - py) * (u[2] - px)) * inv_area;
      double w1 = ((u[2] - px) * (vv[0] - py) - (vv[2] - py) * (u[0] - px)) * inv_area;
      double w2 = 1.0 - w0 - w1;
      if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;

      const double inv_z = w0 * iz[0] + w1 * iz[1] + w2 * iz[2];
      const double z = 1.0 / inv_z;
      const size_t i = size_t(y) * fb.w + x;
      if (z >= fb.depth[i]) continue;
      fb.depth[i] = z;
      fb.semantic[i] = semantic;
      // Perspective-correct color.
      const double cw0 = w0 * iz[0] * z, cw1 = w1 * iz[1] * z, cw2 = w2 * iz[2] * z;
      fb.color[i] = (float(cw0) * v[0].color + float(cw1) * v[1].color + float(cw2) * v[2].color);
      fb.normal[i] = world_normal;
      fb.prim[i] = ref;
    }
  }
}

}  // namespace

RenderMaps render(std::span<const RenderInput> inputs, const Camera& cam) {
  cam.validate();
  Framebuffer fb;
  fb.w = cam.width;
  fb.h = cam.height;
  const size_t n = size_t(fb.w) * fb.h;
  fb.depth.assign(n, std::numeric_limits<double>::infinity());
  fb.semantic.assign(n, 0);
  fb.color.assign(n, Eigen::Vector3f::Zero());
  fb.normal.assign(n, Vec3::Zero());
  fb.prim.assign(n, PrimRef{});

  const RigidTransform world_from_cam_inv = cam.pose.inverse();
  for (const RenderInput& input : inputs) {
    const TriangleMesh& mesh = *input.mesh;
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
      const auto& tri = mesh.triangles[t];
      ClipVertex cv[3];
      bool all_behind = true;
      for (int k = 0; k < 3; ++k) {
        cv[k].cam = world_from_cam_inv.apply(mesh.positions[tri[k]]);
        cv[k].color = mesh.colors[tri[k]];
        if (cv[k].cam.z() >= kNearPlane) all_behind = false;
      }
      if (all_behind) continue;

      ClipVertex clipped[4];
      const int nv = clip_near(cv, clipped);
      if (nv < 3) continue;

      const Vec3 normal = mesh.triangle_normal(t);
      const uint16_t semantic = mesh.semantics[tri[0]];
      const PrimRef ref{input.instance, int32_t(t)};
      for (int k = 2; k < nv; ++k) {
        const ClipVertex fan[3] = {clipped[0], clipped[k - 1], clipped[k]};
        raster_triangle(fb, cam, fan, normal, semantic, ref);
      }
    }
  }

  RenderMaps maps;
  maps.depth = DepthMap(fb.w, fb.h);
  maps.semantic = SemanticMap(fb.w, fb.h);
  maps.color = ColorMap(fb.w, fb.h);
  maps.normals.assign(n, Vec3::Zero());
  maps.prim.assign(n, PrimRef{});
  for (int y = 0; y < fb.h; ++y) {
    for (int x = 0; x < fb.w; ++x) {
      const size_t i = size_t(y) * fb.w + x;
      if (!std::isfinite(fb.depth[i])) continue;
      maps.depth.set(x, y, fb.depth[i]);
      maps.semantic.set(x, y, fb.semantic[i]);
      maps.color.set(x, y, fb.color[i]);
      maps.normals[i] = fb.normal[i];
      maps.prim[i] = fb.prim[i];
    }
  }
  return maps;
}

RenderMaps render_mesh(const TriangleMesh& mesh, const Camera& cam) {
  const RenderInput input{&mesh, kShellInstance};
  return render(std::span<const RenderInput>(&input, 1), cam);
}

RenderMaps render_scene(const ConditionScene& scene, const Camera& cam) {
  std::vector<RenderInput> inputs;
  inputs.reserve(scene.instances.size() + 1);
  for (size_t i = 0; i < scene.instances.size(); ++i)
    inputs.push_back({&scene.instances[i].mesh, int32_t(i)});
  inputs.push_back({&scene.shell, kShellInstance});
  return render(inputs, cam);
}

VisibleSet visible_triangles(const ConditionScene& scene, size_t instance_index,
                             const Camera& cam) {
  if (instance_index >= scene.instances.size())
    throw ValidationError("visible_triangles: instance index out of range");
  const RenderMaps maps = render_scene(scene, cam);
  const PrimitiveInstance& inst = scene.instances[instance_index];

  std::vector<uint8_t> seen(inst.mesh.triangle_count(), 0);
  for (const PrimRef& ref : maps.prim)
    if (ref.valid() && ref.instance == int32_t(instance_index)) seen[size_t(ref.triangle)] = 1;

  VisibleSet out;
  for (size_t t = 0; t < seen.size(); ++t)
    if (seen[t]) {
      out.triangles.push_back(int32_t(t));
      out.area += inst.mesh.triangle_area(t);
    }
  return out;
}

}  // namespace p2r
