#include "prim2room/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prim2room/depth_align.hpp"
#include "prim2room/errors.hpp"
#include "prim2room/image_io.hpp"
#include "prim2room/mesh_io.hpp"
#include "prim2room/rng.hpp"

namespace p2r {

using nlohmann::json;
namespace fs = std::filesystem;

Ablation ablation_from_string(const std::string& name) {
  if (name.empty() || name == "none") return Ablation::none;
  if (name == "no-avs") return Ablation::no_avs;
  if (name == "no-ndr") return Ablation::no_ndr;
  if (name == "raw-ndp") return Ablation::raw_ndp;
  throw ConfigurationError("unknown ablation '" + name + "' (no-avs | no-ndr | raw-ndp)");
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::no_avs: return "no-avs";
    case Ablation::no_ndr: return "no-ndr";
    case Ablation::raw_ndp: return "raw-ndp";
    default: return "none";
  }
}

Intrinsics PipelineConfig::intrinsics() const {
  Intrinsics intr;
  intr.fx = focal_factor * width;
  intr.fy = focal_factor * width;
  intr.cx = width / 2.0;
  intr.cy = height / 2.0;
  intr.width = width;
  intr.height = height;
  return intr;
}

void PipelineConfig::validate() const {
  if (width <= 0 || height <= 0 || width % 4 != 0 || height % 4 != 0)
    throw ConfigurationError("config: resolution must be positive and a multiple of 4");
  if (!(focal_factor > 0.0)) throw ConfigurationError("config: focal_factor must be positive");
  if (!(fusion.edge_factor > 0.0 && fusion.grazing_deg > 0.0 && fusion.seam_tol > 0.0))
    throw ConfigurationError("config: fusion thresholds must be positive");
  if (margin() < 0 || margin() >= std::min(width, height) / 2)
    throw ConfigurationError("config: margin out of range");
  if (!(selection.tau_new >= 0.0) || selection.max_views < 1)
    throw ConfigurationError("config: invalid selection parameters");
  if (registration.levels < 1 || registration.max_iterations < 1 ||
      !(registration.trunc > 0.0) || !(registration.delta_max > 0.0) ||
      registration.max_points < 16)
    throw ConfigurationError("config: invalid registration parameters");
  if (ring.yaw_steps < 1 || !(ring.height > 0.0))
    throw ConfigurationError("config: invalid background ring parameters");
}

PipelineConfig parse_pipeline_config(const std::string& json_text, PipelineConfig base) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("config: document must be a JSON object");
  auto num = [&](const json& j, const char* field, double& target) {
    if (j.contains(field)) target = j[field].get<double>();
  };
  auto integer = [&](const json& j, const char* field, int& target) {
    if (j.contains(field)) target = j[field].get<int>();
  };
  integer(doc, "width", base.width);
  integer(doc, "height", base.height);
  num(doc, "focal_factor", base.focal_factor);
  if (doc.contains("seed")) base.seed = doc["seed"].get<uint64_t>();
  num(doc, "mock_distortion", base.mock_distortion);
  if (doc.contains("backend")) base.backend_spec = doc["backend"].get<std::string>();
  num(doc, "backend_timeout_seconds", base.backend_timeout_seconds);
  if (doc.contains("ablate")) base.ablate = ablation_from_string(doc["ablate"].get<std::string>());
  if (doc.contains("weights")) {
    const json& j = doc["weights"];
    num(j, "w_iou", base.weights.w_iou);
    num(j, "w_norm", base.weights.w_norm);
    integer(j, "margin", base.weights.margin);
  }
  if (doc.contains("selection")) {
    const json& j = doc["selection"];
    num(j, "tau_new", base.selection.tau_new);
    integer(j, "max_views", base.selection.max_views);
    num(j, "grid_step", base.selection.sampling.grid_step);
    num(j, "wall_clearance", base.selection.sampling.wall_clearance);
    num(j, "obstacle_inflation", base.selection.sampling.obstacle_inflation);
    if (j.contains("heights")) {
      base.selection.sampling.heights.clear();
      for (const auto& v : j["heights"]) base.selection.sampling.heights.push_back(v.get<double>());
    }
  }
  if (doc.contains("registration")) {
    const json& j = doc["registration"];
    integer(j, "levels", base.registration.levels);
    integer(j, "hidden_width", base.registration.hidden_width);
    integer(j, "max_iterations", base.registration.max_iterations);
    num(j, "learning_rate", base.registration.learning_rate);
    num(j, "rel_break", base.registration.rel_break);
    integer(j, "break_window", base.registration.break_window);
    num(j, "trunc", base.registration.trunc);
    num(j, "delta_max", base.registration.delta_max);
    num(j, "init_sigma", base.registration.init_sigma);
    integer(j, "max_points", base.registration.max_points);
  }
  if (doc.contains("fusion")) {
    const json& j = doc["fusion"];
    num(j, "edge_factor", base.fusion.edge_factor);
    num(j, "grazing_deg", base.fusion.grazing_deg);
    num(j, "seam_tol", base.fusion.seam_tol);
  }
  if (doc.contains("ring")) {
    const json& j = doc["ring"];
    integer(j, "yaw_steps", base.ring.yaw_steps);
    num(j, "height", base.ring.height);
    num(j, "pitch_down_deg", base.ring.pitch_down_deg);
    num(j, "pitch_up_deg", base.ring.pitch_up_deg);
  }
  base.validate();
  return base;
}

PipelineConfig load_pipeline_config(const std::string& path, PipelineConfig base) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open config: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_pipeline_config(ss.str(), std::move(base));
}

namespace {

std::string frame_prefix(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", index);
  return buf;
}

/// Ring poses that keep the object's center in frame; falls back to the pose
/// best aligned with the object direction.
std::vector<Camera> facing_ring_views(const ConditionScene& scene,
                                      const PrimitiveInstance& target,
                                      const BackgroundRingParams& ring, const Intrinsics& intr) {
  const std::vector<Camera> all = background_trajectory(scene.room, ring, intr);
  std::vector<Camera> facing;
  for (const Camera& cam : all) {
    const Projection pr = project(target.center, cam);
    if (pr.in_front && pr.u >= 0 && pr.u < cam.width && pr.v >= 0 && pr.v < cam.height)
      facing.push_back(cam);
  }
  if (!facing.empty()) return facing;
  size_t best = 0;
  double best_cos = -2.0;
  for (size_t i = 0; i < all.size(); ++i) {
    const Vec3 dir = (target.center - all[i].origin()).normalized();
    const double c = dir.dot(all[i].forward());
    if (c > best_cos) {
      best_cos = c;
      best = i;
    }
  }
  return {all[best]};
}

struct FrameOutput {
  ColorMap color;
  DepthMap warped;
  SemanticMap semantic;
  std::vector<uint8_t> mask;
};

}  // namespace

std::string format_camera_line(const Camera& cam, int frame, int stage, int object) {
  char buf[512];
  const Mat3& r = cam.pose.rotation;
  const Vec3& t = cam.pose.translation;
  std::snprintf(buf, sizeof(buf),
                "frame %d stage %d object %d size %d %d intr %.9g %.9g %.9g %.9g "
                "pos %.9g %.9g %.9g rot %.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g %.12g",
                frame, stage, object, cam.width, cam.height, cam.fx, cam.fy, cam.cx, cam.cy,
                t.x(), t.y(), t.z(), r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2),
                r(2, 0), r(2, 1), r(2, 2));
  return buf;
}

Camera parse_camera_line(const std::string& line) {
  std::istringstream ss(line);
  std::string tok;
  Camera cam;
  int frame, stage, object;
  ss >> tok >> frame;
  if (tok != "frame") throw ParseError("camera line: expected 'frame'");
  ss >> tok >> stage >> tok >> object;
  ss >> tok >> cam.width >> cam.height;
  if (tok != "size") throw ParseError("camera line: expected 'size'");
  ss >> tok >> cam.fx >> cam.fy >> cam.cx >> cam.cy;
  if (tok != "intr") throw ParseError("camera line: expected 'intr'");
  ss >> tok >> cam.pose.translation.x() >> cam.pose.translation.y() >> cam.pose.translation.z();
  if (tok != "pos") throw ParseError("camera line: expected 'pos'");
  ss >> tok;
  if (tok != "rot") throw ParseError("camera line: expected 'rot'");
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c)
      if (!(ss >> cam.pose.rotation(r, c))) throw ParseError("camera line: truncated rotation");
  cam.validate();
  return cam;
}

std::vector<Camera> parse_camera_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open camera file: " + path);
  std::vector<Camera> cams;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    cams.push_back(parse_camera_line(line));
  }
  return cams;
}

std::string report_to_json(const RunReport& report, const PipelineConfig& cfg,
                           const Layout& layout) {
  json j;
  j["config"]["width"] = cfg.width;
  j["config"]["height"] = cfg.height;
  j["config"]["focal_factor"] = cfg.focal_factor;
  j["config"]["seed"] = cfg.seed;
  j["config"]["ablate"] = to_string(cfg.ablate);
  j["config"]["backend"] = cfg.backend_spec;
  j["layout"]["seed"] = layout.seed;
  j["layout"]["objects"] = layout.objects.size();
  j["layout"]["prompt"] = layout.prompt;

  json jframes = json::array();
  for (const FrameRecord& f : report.frames) {
    json jf;
    jf["index"] = f.index;
    jf["stage"] = f.stage;
    jf["object"] = f.object;
    jf["prompt"] = f.prompt;
    jf["gamma"] = f.gamma;
    jf["beta"] = f.beta;
    jf["affine_fallback"] = f.affine_fallback;
    jf["reg_level_loss"] = f.reg_level_loss;
    jf["reg_level_iterations"] = f.reg_level_iterations;
    jf["reg_no_op"] = f.reg_no_op;
    jf["reg_skipped"] = f.reg_skipped;
    jf["mask_pixels"] = f.mask_pixels;
    jf["vertices_added"] = f.fusion_stats.vertices_added;
    jf["triangles_added"] = f.fusion_stats.triangles_added;
    jf["triangles_filtered"] = f.fusion_stats.triangles_filtered;
    jframes.push_back(jf);
  }
  j["frames"] = jframes;

  json jobjects = json::array();
  for (const ObjectRecord& o : report.objects) {
    json jo;
    jo["category"] = o.category;
    jo["record_id"] = o.record_id;
    jo["views"] = o.views;
    jo["observed_area_fraction"] = o.observed_area_fraction;
    jobjects.push_back(jo);
  }
  j["objects"] = jobjects;

  j["totals"]["vertices_added"] = report.total_vertices_added;
  j["totals"]["triangles_added"] = report.total_triangles_added;
  j["totals"]["triangles_filtered"] = report.total_triangles_filtered;
  j["totals"]["background_vertices_removed"] = report.background_vertices_removed;
  j["totals"]["frames"] = report.frames.size();
  j["final"]["vertices"] = report.final_vertices;
  j["final"]["triangles"] = report.final_triangles;
  return j.dump(2) + "\n";
}

RunResult run_pipeline(const Layout& layout, const PrimitiveDatabase& db,
                       const PipelineConfig& cfg, SynthesisBackend& backend,
                       const std::string& out_dir) {
  cfg.validate();
  validate_layout(layout);
  const Intrinsics intr = cfg.intrinsics();
  const uint64_t run_seed = mix_seed(cfg.seed, layout.seed);

  RunResult result;
  result.scene = build_condition_scene(layout, db);
  const ConditionScene& scene = result.scene;

  const bool writing = !out_dir.empty();
  if (writing) {
    fs::create_directories(out_dir);
    fs::create_directories(fs::path(out_dir) / "frames");
  }
  std::ofstream cameras_file;
  if (writing) {
    cameras_file.open(fs::path(out_dir) / "cameras.txt");
    if (!cameras_file) throw IoError("cannot write cameras.txt in " + out_dir);
  }

  SceneMesh mesh;
  RunReport& report = result.report;
  int frame_index = 0;

  ScoreWeights weights = cfg.weights;
  if (weights.margin < 0) weights.margin = cfg.margin();
  SelectionParams selection = cfg.selection;

  auto flush_artifacts = [&]() {
    if (!writing) return;
    write_ply((fs::path(out_dir) / "mesh.ply").string(), result.mesh.mesh);
    std::ofstream rf(fs::path(out_dir) / "report.json");
    if (!rf) throw IoError("cannot write report.json in " + out_dir);
    rf << report_to_json(report, cfg, layout);
  };

  auto process_frame = [&](const Camera& cam, int stage, int object) {
    FrameRecord rec;
    rec.index = frame_index;
    rec.stage = stage;
    rec.object = object;
    rec.camera = cam;

    const RenderMaps cond = render_scene(scene, cam);
    const PartialRender partial = render_partial(mesh, cam);
    rec.mask_pixels = partial.mask_count();
    rec.prompt = build_prompt(cond.semantic, scene.registry, layout.prompt);

    SynthesisRequest req;
    req.partial = partial.color;
    req.mask = partial.inpaint_mask;
    req.semantic = cond.semantic;
    req.condition_depth = cond.depth;
    req.prompt = rec.prompt;
    req.seed = mix_seed(run_seed, uint64_t(frame_index), 0x5);
    const ColorMap color = synthesize(req, backend);

    DepthContext ctx;
    ctx.condition = &cond.depth;
    ctx.seed = mix_seed(run_seed, uint64_t(frame_index), 0xD);
    ctx.strength = cfg.mock_distortion;
    const DepthEstimate est = estimate_depth(color, backend, ctx);

    AffineDepthParams affine;
    try {
      affine = fit_scale_shift(est.metric_depth, cond.depth);
    } catch (const DegenerateFitError&) {
      affine = fit_scale_shift_or_fallback(est.metric_depth, cond.depth);
      rec.affine_fallback = true;
    }
    rec.gamma = affine.gamma;
    rec.beta = affine.beta;
    const DepthMap aligned = apply_affine(est.metric_depth, affine);

    DepthMap warped;
    std::vector<Vec2i> provenance;
    if (cfg.ablate == Ablation::no_ndr) {
      warped = aligned;
      rec.reg_skipped = true;
    } else {
      std::vector<PointCloud> targets;
      targets.push_back(unproject(cond.depth, cam));
      if (!mesh.empty()) targets.push_back(unproject(partial.depth, cam));
      const WarpMode mode = cfg.ablate == Ablation::raw_ndp ? WarpMode::ndp : WarpMode::ndr;
      const RegistrationResult reg =
          register_depth(aligned, cam, targets, mode, cfg.registration,
                         mix_seed(run_seed, uint64_t(frame_index), 0xE));
      warped = reg.warped;
      provenance = reg.provenance;
      rec.reg_level_loss = reg.level_loss;
      rec.reg_level_iterations = reg.level_iterations;
      rec.reg_no_op = reg.no_op;
    }

    const StagePolicy policy =
        stage == 1 ? StagePolicy::by_semantic : StagePolicy::all_background;
    mesh = fuse(mesh, color, warped, provenance, cond.semantic, cam, partial.inpaint_mask,
                policy, cfg.fusion, &rec.fusion_stats);

    if (writing) {
      const std::string prefix = (fs::path(out_dir) / "frames" / frame_prefix(frame_index)).string();
      write_file(prefix + "_color.png", encode_color_png(color));
      write_file(prefix + "_depth.png", encode_depth_png16(warped));
      write_file(prefix + "_semantic.png", encode_semantic_png(cond.semantic));
      write_file(prefix + "_mask.png",
                 encode_mask_png(partial.inpaint_mask, cfg.width, cfg.height));
      cameras_file << format_camera_line(cam, frame_index, stage, object) << "\n";
    }

    report.total_vertices_added += rec.fusion_stats.vertices_added;
    report.total_triangles_added += rec.fusion_stats.triangles_added;
    report.total_triangles_filtered += rec.fusion_stats.triangles_filtered;
    report.frames.push_back(std::move(rec));
    ++frame_index;
  };

  try {
    // Stage 1: foreground objects from adaptive (or ablated) views.
    for (size_t i = 0; i < scene.instances.size(); ++i) {
      std::vector<Camera> views;
      ObjectRecord obj;
      obj.category = layout.objects[i].category;
      obj.record_id = scene.instances[i].record_id;
      if (cfg.ablate == Ablation::no_avs) {
        views = facing_ring_views(scene, scene.instances[i], cfg.ring, intr);
        // Coverage bookkeeping for the report.
        ObservedSet observed;
        for (const Camera& cam : views) {
          const VisibleSet vis = visible_triangles(scene, i, cam);
          observed.add(int32_t(i), vis.triangles, scene.instances[i].mesh.triangle_count());
        }
        double area = 0.0;
        for (size_t t = 0; t < scene.instances[i].mesh.triangle_count(); ++t)
          if (observed.contains(int32_t(i), int32_t(t)))
            area += scene.instances[i].mesh.triangle_area(t);
        obj.observed_area_fraction =
            scene.instances[i].total_area > 0 ? area / scene.instances[i].total_area : 0.0;
      } else {
        SelectionResult sel = select_viewpoints(scene, i, weights, selection, intr);
        views = std::move(sel.views);
        obj.observed_area_fraction =
            scene.instances[i].total_area > 0 ? sel.observed_area / scene.instances[i].total_area
                                              : 0.0;
      }
      obj.views = int(views.size());
      report.objects.push_back(obj);
      for (const Camera& cam : views) process_frame(cam, 1, int(i));
    }

    const size_t before_removal = mesh.vertex_count();
    mesh = remove_background(mesh);
    report.background_vertices_removed = before_removal - mesh.vertex_count();

    // Stage 2: background shell from the predefined trajectory.
    for (const Camera& cam : background_trajectory(scene.room, cfg.ring, intr))
      process_frame(cam, 2, -1);
  } catch (const Error& e) {
    result.mesh = mesh;
    report.final_vertices = mesh.mesh.vertex_count();
    report.final_triangles = mesh.mesh.triangle_count();
    flush_artifacts();
    throw Error("pipeline aborted at frame " + std::to_string(frame_index) + ": " + e.what());
  }

  result.mesh = std::move(mesh);
  report.final_vertices = result.mesh.mesh.vertex_count();
  report.final_triangles = result.mesh.mesh.triangle_count();
  flush_artifacts();
  return result;
}

}  // namespace p2r
