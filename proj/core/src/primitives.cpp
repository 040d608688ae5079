#include "prim2room/primitives.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prim2room/errors.hpp"
#include "prim2room/mesh_io.hpp"

namespace p2r {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr float kShellGray = 0.75f;
constexpr float kPrimGray = 0.7f;

void append_box(TriangleMesh& mesh, const Vec3& lo, const Vec3& hi, float gray) {
  const int base = int(mesh.vertex_count());
  const Eigen::Vector3f color(gray, gray, gray);
  const double xs[2] = {lo.x(), hi.x()};
  const double ys[2] = {lo.y(), hi.y()};
  const double zs[2] = {lo.z(), hi.z()};
  // 0..7: (x,y,z) bit order little-endian per corner index below
  mesh.add_vertex({xs[0], ys[0], zs[0]}, color, 0);
  mesh.add_vertex({xs[1], ys[0], zs[0]}, color, 0);
  mesh.add_vertex({xs[1], ys[1], zs[0]}, color, 0);
  mesh.add_vertex({xs[0], ys[1], zs[0]}, color, 0);
  mesh.add_vertex({xs[0], ys[0], zs[1]}, color, 0);
  mesh.add_vertex({xs[1], ys[0], zs[1]}, color, 0);
  mesh.add_vertex({xs[1], ys[1], zs[1]}, color, 0);
  mesh.add_vertex({xs[0], ys[1], zs[1]}, color, 0);
  const int f[12][3] = {
      {0, 3, 2}, {0, 2, 1},  // bottom (-z)
      {4, 5, 6}, {4, 6, 7},  // top (+z)
      {0, 1, 5}, {0, 5, 4},  // -y
      {2, 3, 7}, {2, 7, 6},  // +y
      {0, 4, 7}, {0, 7, 3},  // -x
      {1, 2, 6}, {1, 6, 5},  // +x
  };
  for (const auto& t : f) mesh.add_triangle(base + t[0], base + t[1], base + t[2]);
}

TriangleMesh box_mesh(const Vec3& lo, const Vec3& hi) {
  TriangleMesh m;
  append_box(m, lo, hi, kPrimGray);
  return m;
}

PrimitiveRecord make_record(std::string id, std::string category, std::vector<std::string> tags,
                            TriangleMesh mesh) {
  PrimitiveRecord rec;
  rec.id = std::move(id);
  rec.category = std::move(category);
  rec.tags = std::move(tags);
  Vec3 lo, hi;
  mesh.bounds(lo, hi);
  rec.bbox_w = hi.x() - lo.x();
  rec.bbox_d = hi.y() - lo.y();
  rec.bbox_h = hi.z() - lo.z();
  rec.mesh = std::make_shared<TriangleMesh>(std::move(mesh));
  return rec;
}

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

PrimitiveDatabase PrimitiveDatabase::builtin() {
  PrimitiveDatabase db;
  auto& recs = db.records_;

  {  // square chair: seat slab + backrest
    TriangleMesh m;
    append_box(m, {-0.25, -0.25, 0.35}, {0.25, 0.25, 0.45}, kPrimGray);   // seat
    append_box(m, {-0.22, -0.22, 0.0}, {-0.16, -0.16, 0.35}, kPrimGray);  // legs
    append_box(m, {0.16, -0.22, 0.0}, {0.22, -0.16, 0.35}, kPrimGray);
    append_box(m, {-0.22, 0.16, 0.0}, {-0.16, 0.22, 0.35}, kPrimGray);
    append_box(m, {0.16, 0.16, 0.0}, {0.22, 0.22, 0.35}, kPrimGray);
    append_box(m, {-0.25, 0.19, 0.45}, {0.25, 0.25, 0.95}, kPrimGray);  // backrest
    recs.push_back(make_record("chair-a", "chair", {"wooden", "simple"}, std::move(m)));
  }
  {  // wide chair variant
    TriangleMesh m;
    append_box(m, {-0.35, -0.25, 0.3}, {0.35, 0.25, 0.42}, kPrimGray);
    append_box(m, {-0.33, -0.23, 0.0}, {0.33, 0.23, 0.3}, kPrimGray);  // closed base
    append_box(m, {-0.35, 0.17, 0.42}, {0.35, 0.25, 0.85}, kPrimGray);
    recs.push_back(make_record("chair-b", "chair", {"armchair", "padded"}, std::move(m)));
  }
  {  // rectangular table: top + 4 legs
    TriangleMesh m;
    append_box(m, {-0.6, -0.4, 0.7}, {0.6, 0.4, 0.75}, kPrimGray);
    append_box(m, {-0.56, -0.36, 0.0}, {-0.48, -0.28, 0.7}, kPrimGray);
    append_box(m, {0.48, -0.36, 0.0}, {0.56, -0.28, 0.7}, kPrimGray);
    append_box(m, {-0.56, 0.28, 0.0}, {-0.48, 0.36, 0.7}, kPrimGray);
    append_box(m, {0.48, 0.28, 0.0}, {0.56, 0.36, 0.7}, kPrimGray);
    recs.push_back(make_record("table-a", "table", {"wooden", "dining"}, std::move(m)));
  }
  {  // square side table
    TriangleMesh m;
    append_box(m, {-0.5, -0.5, 0.68}, {0.5, 0.5, 0.74}, kPrimGray);
    append_box(m, {-0.06, -0.06, 0.0}, {0.06, 0.06, 0.68}, kPrimGray);  // pedestal
    append_box(m, {-0.3, -0.3, 0.0}, {0.3, 0.3, 0.06}, kPrimGray);      // foot
    recs.push_back(make_record("table-b", "table", {"round", "pedestal"}, std::move(m)));
  }
  {  // sofa: base + back + arms
    TriangleMesh m;
    append_box(m, {-1.0, -0.45, 0.0}, {1.0, 0.45, 0.45}, kPrimGray);
    append_box(m, {-1.0, 0.25, 0.45}, {1.0, 0.45, 0.85}, kPrimGray);
    append_box(m, {-1.0, -0.45, 0.45}, {-0.8, 0.25, 0.65}, kPrimGray);
    append_box(m, {0.8, -0.45, 0.45}, {1.0, 0.25, 0.65}, kPrimGray);
    recs.push_back(make_record("sofa-a", "sofa", {"fabric", "threeseat"}, std::move(m)));
  }
  {  // bed: platform + headboard
    TriangleMesh m;
    append_box(m, {-1.0, -0.8, 0.0}, {1.0, 0.8, 0.45}, kPrimGray);
    append_box(m, {-1.0, 0.72, 0.45}, {1.0, 0.8, 1.0}, kPrimGray);
    recs.push_back(make_record("bed-a", "bed", {"double"}, std::move(m)));
  }
  recs.push_back(make_record("crate-a", "crate", {"plain", "cube"},
                             box_mesh({-0.5, -0.5, 0.0}, {0.5, 0.5, 1.0})));
  recs.push_back(make_record("wardrobe-a", "wardrobe", {"tall"},
                             box_mesh({-0.6, -0.3, 0.0}, {0.6, 0.3, 2.0})));
  recs.push_back(make_record("shelf-a", "shelf", {"narrow"},
                             box_mesh({-0.4, -0.15, 0.0}, {0.4, 0.15, 1.8})));
  recs.push_back(make_record("panel-a", "panel", {"thin", "flat"},
                             box_mesh({-0.6, -0.025, 0.0}, {0.6, 0.025, 1.8})));
  recs.push_back(make_record("stool-a", "stool", {"small"},
                             box_mesh({-0.2, -0.2, 0.0}, {0.2, 0.2, 0.45})));
  {  // desk: top + two side panels
    TriangleMesh m;
    append_box(m, {-0.7, -0.35, 0.7}, {0.7, 0.35, 0.75}, kPrimGray);
    append_box(m, {-0.7, -0.35, 0.0}, {-0.64, 0.35, 0.7}, kPrimGray);
    append_box(m, {0.64, -0.35, 0.0}, {0.7, 0.35, 0.7}, kPrimGray);
    recs.push_back(make_record("desk-a", "desk", {"office"}, std::move(m)));
  }
  return db;
}

PrimitiveDatabase PrimitiveDatabase::load_manifest(const std::string& manifest_path) {
  std::ifstream f(manifest_path);
  if (!f) throw IoError("cannot open primitive manifest: " + manifest_path);
  json doc;
  try {
    f >> doc;
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: invalid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ParseError("manifest: document must be a JSON array");

  PrimitiveDatabase db;
  db.base_dir_ = fs::path(manifest_path).parent_path().string();
  for (size_t i = 0; i < doc.size(); ++i) {
    const json& jr = doc[i];
    const std::string where = "manifest[" + std::to_string(i) + "]";
    PrimitiveRecord rec;
    if (!jr.contains("id") || !jr["id"].is_string()) throw ParseError(where + ".id missing");
    if (!jr.contains("category") || !jr["category"].is_string())
      throw ParseError(where + ".category missing");
    if (!jr.contains("mesh") || !jr["mesh"].is_string()) throw ParseError(where + ".mesh missing");
    if (!jr.contains("bbox") || !jr["bbox"].is_array() || jr["bbox"].size() != 3)
      throw ParseError(where + ".bbox must be [w, d, h]");
    rec.id = jr["id"].get<std::string>();
    rec.category = jr["category"].get<std::string>();
    rec.mesh_path = jr["mesh"].get<std::string>();
    rec.bbox_w = jr["bbox"][0].get<double>();
    rec.bbox_d = jr["bbox"][1].get<double>();
    rec.bbox_h = jr["bbox"][2].get<double>();
    if (!(rec.bbox_w > 0.0 && rec.bbox_d > 0.0 && rec.bbox_h > 0.0))
      throw ValidationError(where + ".bbox must be strictly positive");
    if (jr.contains("tags"))
      for (const auto& t : jr["tags"]) rec.tags.push_back(t.get<std::string>());
    db.records_.push_back(std::move(rec));
  }
  return db;
}

std::shared_ptr<const TriangleMesh> PrimitiveDatabase::mesh(const PrimitiveRecord& rec) const {
  if (rec.mesh) return rec.mesh;
  auto it = cache_.find(rec.id);
  if (it != cache_.end()) return it->second;
  const fs::path path = fs::path(base_dir_) / rec.mesh_path;
  auto loaded = std::make_shared<TriangleMesh>(read_mesh(path.string()));
  cache_[rec.id] = loaded;
  return loaded;
}

void PrimitiveDatabase::write_to_dir(const std::string& dir) const {
  fs::create_directories(dir);
  json manifest = json::array();
  for (const PrimitiveRecord& rec : records_) {
    const std::string mesh_name = rec.id + ".ply";
    write_ply((fs::path(dir) / mesh_name).string(), *mesh(rec));
    json jr;
    jr["id"] = rec.id;
    jr["category"] = rec.category;
    jr["tags"] = rec.tags;
    jr["mesh"] = mesh_name;
    jr["bbox"] = {rec.bbox_w, rec.bbox_d, rec.bbox_h};
    manifest.push_back(jr);
  }
  std::ofstream f(fs::path(dir) / "manifest.json");
  if (!f) throw IoError("cannot write manifest in: " + dir);
  f << manifest.dump(2) << "\n";
}

const PrimitiveRecord& retrieve_primitive(const ObjectBox& box,
                                          const std::vector<PrimitiveRecord>& db, uint64_t) {
  const PrimitiveRecord* best = nullptr;
  double best_score = 0.0;
  std::vector<std::string> box_tags;
  for (const std::string& t : box.tags) box_tags.push_back(to_lower(t));

  for (const PrimitiveRecord& rec : db) {
    if (rec.category != box.category) continue;
    const double aspect =
        std::abs(std::log(box.width / box.depth) - std::log(rec.bbox_w / rec.bbox_d));
    double score = aspect;
    if (!box_tags.empty()) {
      size_t overlap = 0;
      for (const std::string& t : box_tags)
        for (const std::string& rt : rec.tags)
          if (to_lower(rt) == t) {
            ++overlap;
            break;
          }
      score -= 0.5 * double(overlap) / double(box_tags.size());
    }
    if (!best || score < best_score || (score == best_score && rec.id < best->id)) {
      best = &rec;
      best_score = score;
    }
  }
  if (!best) throw RetrievalError("no primitive record for category '" + box.category + "'");
  return *best;
}

PrimitiveInstance place_primitive(const ObjectBox& box, const PrimitiveRecord& rec,
                                  const TriangleMesh& native_mesh) {
  PrimitiveInstance inst;
  inst.record_id = rec.id;
  inst.mesh = native_mesh;

  Vec3 lo, hi;
  inst.mesh.bounds(lo, hi);
  const Vec3 native_size = hi - lo;
  if (!(native_size.x() > 0.0 && native_size.y() > 0.0 && native_size.z() > 0.0))
    throw ValidationError("place_primitive: native mesh has a degenerate bounding box");

  // Center the footprint at the origin; rest on z = 0.
  inst.mesh.translate(Vec3(-(lo.x() + hi.x()) / 2.0, -(lo.y() + hi.y()) / 2.0, -lo.z()));

  const double sx = box.width / native_size.x();
  const double sy = box.depth / native_size.y();
  const double sz = box.height ? *box.height / native_size.z() : (sx + sy) / 2.0;
  inst.mesh.scale(Vec3(sx, sy, sz));

  const double rad = box.rotation_deg * M_PI / 180.0;
  RigidTransform rt;
  rt.rotation = Eigen::AngleAxisd(rad, Vec3::UnitZ()).toRotationMatrix();
  rt.translation = Vec3(box.center_x, box.center_y, 0.0);
  inst.mesh.transform(rt);

  inst.mesh.bounds(inst.aabb_lo, inst.aabb_hi);
  inst.center = (inst.aabb_lo + inst.aabb_hi) / 2.0;
  inst.total_area = mesh_surface_area(inst.mesh);
  return inst;
}

CategoryRegistry::CategoryRegistry() {
  entries_.emplace_back("floor", kSemFloor);
  entries_.emplace_back("ceiling", kSemCeiling);
  entries_.emplace_back("wall", kSemWall);
}

uint16_t CategoryRegistry::add(const std::string& name) {
  for (const auto& [n, id] : entries_)
    if (n == name) return id;
  const uint16_t id = next_id_++;
  entries_.emplace_back(name, id);
  return id;
}

uint16_t CategoryRegistry::id_for(const std::string& name) const {
  for (const auto& [n, id] : entries_)
    if (n == name) return id;
  throw ValidationError("registry: unknown category '" + name + "'");
}

const std::string& CategoryRegistry::name_for(uint16_t id) const {
  for (const auto& [n, i] : entries_)
    if (i == id) return n;
  throw ValidationError("registry: unknown category ID " + std::to_string(id));
}

bool CategoryRegistry::contains(uint16_t id) const {
  for (const auto& [n, i] : entries_)
    if (i == id) return true;
  return false;
}

ConditionScene assemble_scene(const Layout& layout, std::vector<PrimitiveInstance> instances) {
  if (instances.size() != layout.objects.size())
    throw ValidationError("assemble_scene: one instance per layout object required");

  ConditionScene scene;
  scene.room = layout.room;
  scene.instances = std::move(instances);
  for (size_t i = 0; i < scene.instances.size(); ++i) {
    PrimitiveInstance& inst = scene.instances[i];
    inst.source_box = int(i);
    inst.category_id = scene.registry.add(layout.objects[i].category);
    std::fill(inst.mesh.semantics.begin(), inst.mesh.semantics.end(), inst.category_id);

    constexpr double kTol = 1e-3;
    if (inst.aabb_lo.x() < -kTol || inst.aabb_lo.y() < -kTol || inst.aabb_lo.z() < -kTol ||
        inst.aabb_hi.x() > layout.room.width + kTol || inst.aabb_hi.y() > layout.room.depth + kTol ||
        inst.aabb_hi.z() > layout.room.height + kTol)
      throw ValidationError("assemble_scene: instance " + std::to_string(i) +
                            " extends outside the room shell");
  }

  // Shell: six inward-facing rectangles, two triangles each. Vertices are not
  // shared across faces so per-vertex labels stay per-face.
  const double w = layout.room.width, d = layout.room.depth, h = layout.room.height;
  TriangleMesh& shell = scene.shell;
  const Eigen::Vector3f gray(kShellGray, kShellGray, kShellGray);
  auto add_rect = [&](const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& dd, uint16_t label) {
    const int base = int(shell.vertex_count());
    shell.add_vertex(a, gray, label);
    shell.add_vertex(b, gray, label);
    shell.add_vertex(c, gray, label);
    shell.add_vertex(dd, gray, label);
    shell.add_triangle(base, base + 1, base + 2);
    shell.add_triangle(base, base + 2, base + 3);
  };
  // Winding chosen so normals point into the room.
  add_rect({0, 0, 0}, {w, 0, 0}, {w, d, 0}, {0, d, 0}, kSemFloor);       // floor, +z
  add_rect({0, 0, h}, {0, d, h}, {w, d, h}, {w, 0, h}, kSemCeiling);     // ceiling, -z
  add_rect({0, 0, 0}, {0, 0, h}, {w, 0, h}, {w, 0, 0}, kSemWall);        // y = 0, +y
  add_rect({0, d, 0}, {w, d, 0}, {w, d, h}, {0, d, h}, kSemWall);        // y = d, -y
  add_rect({0, 0, 0}, {0, d, 0}, {0, d, h}, {0, 0, h}, kSemWall);        // x = 0, +x
  add_rect({w, 0, 0}, {w, 0, h}, {w, d, h}, {w, d, 0}, kSemWall);        // x = w, -x
  return scene;
}

ConditionScene build_condition_scene(const Layout& layout, const PrimitiveDatabase& db) {
  std::vector<PrimitiveInstance> instances;
  instances.reserve(layout.objects.size());
  for (const ObjectBox& box : layout.objects) {
    const PrimitiveRecord& rec = retrieve_primitive(box, db.records(), layout.seed);
    instances.push_back(place_primitive(box, rec, *db.mesh(rec)));
  }
  return assemble_scene(layout, std::move(instances));
}

}  // namespace p2r
