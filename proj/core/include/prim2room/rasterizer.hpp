#pragma once

// Software z-buffer rasterizer. Renders labeled triangle meshes into
// per-pixel depth / semantic / normal / color / primitive-ID maps.
//
// Pixel (x, y) samples the continuous image point (x, y); nearest surface
// wins; back-face culling is disabled (the shell faces inward and primitives
// may be open). Depth interpolation is perspective-correct. No anti-aliasing.

#include <span>
#include <vector>

#include "prim2room/geometry.hpp"
#include "prim2room/primitives.hpp"

namespace p2r {

/// Instance index reserved for the room shell in prim-ID maps.
constexpr int32_t kShellInstance = -1;

struct RenderInput {
  const TriangleMesh* mesh = nullptr;
  int32_t instance = kShellInstance;
};

struct PrimRef {
  int32_t instance = kShellInstance;
  int32_t triangle = -1;  // -1 = empty pixel

  bool valid() const { return triangle >= 0; }
};

struct RenderMaps {
  DepthMap depth;
  SemanticMap semantic;
  ColorMap color;
  std::vector<Vec3> normals;  // unit world-space normals; zero on empty pixels
  std::vector<PrimRef> prim;

  const PrimRef& prim_at(int x, int y) const { return prim[size_t(y) * depth.width() + x]; }
  const Vec3& normal_at(int x, int y) const { return normals[size_t(y) * depth.width() + x]; }
};

/// Rasterizes the inputs; an empty input list yields all-invalid maps.
RenderMaps render(std::span<const RenderInput> inputs, const Camera& cam);

/// Convenience single-mesh render.
RenderMaps render_mesh(const TriangleMesh& mesh, const Camera& cam);

/// Condition-scene render: instances (by index) plus the shell.
RenderMaps render_scene(const ConditionScene& scene, const Camera& cam);

struct VisibleSet {
  std::vector<int32_t> triangles;  // sorted, unique
  double area = 0.0;               // full-triangle attribution
};

/// Triangles of `instance_index` visible in a full-scene render, with their
/// summed surface area. A triangle seen in at least one pixel counts whole.
VisibleSet visible_triangles(const ConditionScene& scene, size_t instance_index,
                             const Camera& cam);

}  // namespace p2r
