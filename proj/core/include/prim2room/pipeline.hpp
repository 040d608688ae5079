#pragma once

// The iterative project-and-inpaint loop: per-object adaptive views first
// (stage 1), background removal, then the predefined background trajectory
// (stage 2). Owns the config surface and the run artifacts (mesh.ply,
// per-frame PNGs, report.json, cameras.txt).

#include <optional>
#include <string>
#include <vector>

#include "prim2room/fusion.hpp"
#include "prim2room/layout.hpp"
#include "prim2room/primitives.hpp"
#include "prim2room/registration.hpp"
#include "prim2room/synthesis.hpp"
#include "prim2room/viewpoint.hpp"

namespace p2r {

enum class Ablation { none, no_avs, no_ndr, raw_ndp };

Ablation ablation_from_string(const std::string& name);
std::string to_string(Ablation a);

struct PipelineConfig {
  int width = 512;
  int height = 384;
  double focal_factor = 0.9;  // fx = fy = focal_factor * width
  ScoreWeights weights{1.0, 0.5, -1};  // margin < 0 derives floor(width / 16)
  SelectionParams selection;
  RegistrationParams registration;
  FusionConfig fusion;
  BackgroundRingParams ring;
  uint64_t seed = 0;
  double mock_distortion = 1.0;
  std::string backend_spec = "mock";  // "mock" or "proto:<command>"
  double backend_timeout_seconds = 300.0;
  Ablation ablate = Ablation::none;

  Intrinsics intrinsics() const;
  int margin() const { return weights.margin >= 0 ? weights.margin : width / 16; }
  void validate() const;
};

/// Partial override: fields present in the JSON replace those in `base`.
PipelineConfig parse_pipeline_config(const std::string& json_text, PipelineConfig base = {});
PipelineConfig load_pipeline_config(const std::string& path, PipelineConfig base = {});

struct FrameRecord {
  int index = 0;
  int stage = 1;
  int object = -1;  // layout object index; -1 for background frames
  Camera camera;
  std::string prompt;
  double gamma = 1.0;
  double beta = 0.0;
  bool affine_fallback = false;
  std::vector<double> reg_level_loss;
  std::vector<int> reg_level_iterations;
  bool reg_no_op = false;
  bool reg_skipped = false;  // no-ndr arm
  size_t mask_pixels = 0;
  FuseStats fusion_stats;
};

struct ObjectRecord {
  std::string category;
  std::string record_id;
  int views = 0;
  double observed_area_fraction = 0.0;
};

struct RunReport {
  std::vector<FrameRecord> frames;
  std::vector<ObjectRecord> objects;
  size_t total_vertices_added = 0;
  size_t total_triangles_added = 0;
  size_t total_triangles_filtered = 0;
  size_t background_vertices_removed = 0;
  size_t final_vertices = 0;
  size_t final_triangles = 0;
};

struct RunResult {
  SceneMesh mesh;
  RunReport report;
  ConditionScene scene;
};

/// Runs the full two-stage pipeline. When `out_dir` is non-empty the
/// artifacts are written there: mesh.ply, frames/NNN_{color,depth,semantic,
/// mask}.png, report.json, cameras.txt. On error, partial artifacts are
/// flushed and the error is rethrown tagged with the frame index and stage.
RunResult run_pipeline(const Layout& layout, const PrimitiveDatabase& db,
                       const PipelineConfig& cfg, SynthesisBackend& backend,
                       const std::string& out_dir = "");

std::string report_to_json(const RunReport& report, const PipelineConfig& cfg,
                           const Layout& layout);

/// One-line camera record: "frame <i> stage <s> object <o> size <w> <h>
/// intr <fx fy cx cy> pos <x y z> rot <r00..r22>" (row-major rotation).
std::string format_camera_line(const Camera& cam, int frame, int stage, int object);
Camera parse_camera_line(const std::string& line);
std::vector<Camera> parse_camera_file(const std::string& path);

}  // namespace p2r
