#pragma once

// Depth-map-to-mesh fusion: per-pixel quad triangulation of the warped depth
// over the inpaint mask, with edge-stretch and grazing-angle filters and
// seam stitching against the existing mesh, plus the background trajectory
// and background removal of the two-stage schedule.

#include <vector>

#include "prim2room/geometry.hpp"
#include "prim2room/rasterizer.hpp"
#include "prim2room/viewpoint.hpp"

namespace p2r {

enum class StageTag : uint8_t { foreground = 0, background = 1 };

/// Growing scene mesh with a per-vertex generation-stage tag.
struct SceneMesh {
  TriangleMesh mesh;
  std::vector<uint8_t> stage;  // StageTag per vertex

  size_t vertex_count() const { return mesh.vertex_count(); }
  bool empty() const { return mesh.empty(); }
};

struct PartialRender {
  ColorMap color;
  DepthMap depth;
  SemanticMap semantic;
  std::vector<uint8_t> inpaint_mask;  // true = not covered by the mesh

  size_t mask_count() const;
};

/// Rasterizes the scene mesh; the inpaint mask marks pixels with no mesh
/// coverage. An empty mesh yields a full-true mask.
PartialRender render_partial(const SceneMesh& mesh, const Camera& cam);

struct FusionConfig {
  double edge_factor = 3.0;    // edge > factor * neighborhood median => drop
  double grazing_deg = 80.0;   // normal-to-view angle above this => drop
  double seam_tol = 0.02;      // meters
};

enum class StagePolicy {
  by_semantic,     // background categories tag background, objects foreground
  all_background,  // stage-2 frames
};

struct FuseStats {
  size_t vertices_added = 0;
  size_t triangles_added = 0;
  size_t triangles_filtered = 0;
};

/// Fuses one frame into the mesh. `provenance` maps each depth pixel to the
/// source pixel whose point produced it (empty = identity): vertex color
/// comes from the frame color at the pixel, semantics from the condition map
/// at the provenance pixel. Border pixels already covered by the mesh stitch
/// to the existing surface when the rendered depth agrees within seam_tol.
SceneMesh fuse(const SceneMesh& mesh, const ColorMap& color, const DepthMap& warped_depth,
               const std::vector<Vec2i>& provenance, const SemanticMap& condition_semantic,
               const Camera& cam, const std::vector<uint8_t>& inpaint_mask, StagePolicy policy,
               const FusionConfig& cfg, FuseStats* stats = nullptr);

/// Drops every vertex labeled wall/floor/ceiling/empty (and incident
/// triangles); object-labeled geometry is untouched.
SceneMesh remove_background(const SceneMesh& mesh);

struct BackgroundRingParams {
  int yaw_steps = 18;          // 360 / 18 = 20 degree steps
  double height = 1.5;         // meters, both rings
  double pitch_down_deg = -15.0;
  double pitch_up_deg = 25.0;
};

/// Two fixed-pivot rings at the room center (down-pitched then up-pitched),
/// plus one straight-down and one straight-up pose: 2 * yaw_steps + 2 views.
std::vector<Camera> background_trajectory(const RoomDims& room, const BackgroundRingParams& params,
                                          const Intrinsics& intr);

}  // namespace p2r
