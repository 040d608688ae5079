#pragma once

// Primitive retrieval and placement: one placed primitive mesh per layout
// box, plus the room shell, form the condition scene that every render and
// registration target derives from.
//
// Primitive manifest schema (JSON):
//   [{"id": "chair-a", "category": "chair", "tags": ["wooden"],
//     "mesh": "chair-a.ply", "bbox": [w, d, h]}, ...]
// Mesh paths are relative to the manifest file.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "prim2room/geometry.hpp"
#include "prim2room/layout.hpp"

namespace p2r {

struct PrimitiveRecord {
  std::string id;
  std::string category;
  std::vector<std::string> tags;
  std::string mesh_path;  // empty for in-memory (builtin) records
  double bbox_w = 0.0;
  double bbox_d = 0.0;
  double bbox_h = 0.0;
  std::shared_ptr<const TriangleMesh> mesh;  // set for builtin records
};

class PrimitiveDatabase {
 public:
  /// ~12 procedurally generated box-style primitives across common furniture
  /// categories; lets desk-scale runs work without any external model set.
  static PrimitiveDatabase builtin();

  static PrimitiveDatabase load_manifest(const std::string& manifest_path);

  const std::vector<PrimitiveRecord>& records() const { return records_; }

  /// The record's mesh (loads and caches file-backed records).
  std::shared_ptr<const TriangleMesh> mesh(const PrimitiveRecord& rec) const;

  /// Writes manifest.json plus one PLY per record into `dir`.
  void write_to_dir(const std::string& dir) const;

 private:
  std::vector<PrimitiveRecord> records_;
  std::string base_dir_;
  mutable std::map<std::string, std::shared_ptr<const TriangleMesh>> cache_;
};

/// Best record of the box's category: minimal aspect-ratio distance in log
/// space, minus 0.5 * tag-overlap fraction when the box carries tags.
/// Ties break toward the lexicographically smaller id. The seed is accepted
/// for interface stability; scoring is fully deterministic.
const PrimitiveRecord& retrieve_primitive(const ObjectBox& box,
                                          const std::vector<PrimitiveRecord>& db, uint64_t seed);

struct PrimitiveInstance {
  std::string record_id;
  TriangleMesh mesh;  // placed, world frame
  int source_box = -1;
  uint16_t category_id = 0;
  Vec3 center = Vec3::Zero();  // centroid of the placed mesh's bounding box
  double total_area = 0.0;
  Vec3 aabb_lo = Vec3::Zero();
  Vec3 aabb_hi = Vec3::Zero();
};

/// Scales the record mesh so its native footprint fits the box exactly
/// (height from box.height when present, otherwise native height times the
/// mean footprint scale), rotates about +Z, and rests it on the floor at the
/// box center.
PrimitiveInstance place_primitive(const ObjectBox& box, const PrimitiveRecord& rec,
                                  const TriangleMesh& native_mesh);

/// Category name <-> ID map. floor/ceiling/wall are reserved; object
/// categories get IDs from 16 in first-appearance order.
class CategoryRegistry {
 public:
  CategoryRegistry();

  uint16_t add(const std::string& name);       // idempotent
  uint16_t id_for(const std::string& name) const;
  const std::string& name_for(uint16_t id) const;
  bool contains(uint16_t id) const;
  const std::vector<std::pair<std::string, uint16_t>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, uint16_t>> entries_;
  uint16_t next_id_ = kSemFirstObject;
};

struct ConditionScene {
  std::vector<PrimitiveInstance> instances;
  TriangleMesh shell;
  CategoryRegistry registry;
  RoomDims room;
};

/// Builds the shell, assigns category IDs (first-appearance order) and
/// stamps per-vertex semantics onto the instance meshes.
ConditionScene assemble_scene(const Layout& layout, std::vector<PrimitiveInstance> instances);

/// retrieve + place + assemble for every layout box.
ConditionScene build_condition_scene(const Layout& layout, const PrimitiveDatabase& db);

}  // namespace p2r
