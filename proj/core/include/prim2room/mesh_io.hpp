#pragma once

// Mesh serialization. Scene meshes go out as ASCII PLY with per-vertex
// red/green/blue and a custom integer `semantic` property. Primitive meshes
// load from ASCII PLY or OBJ (positions + triangles; other attributes are
// ignored on load).

#include <string>

#include "prim2room/geometry.hpp"

namespace p2r {

std::string mesh_to_ply(const TriangleMesh& mesh);
void write_ply(const std::string& path, const TriangleMesh& mesh);

TriangleMesh read_ply(const std::string& path);
TriangleMesh read_obj(const std::string& path);

/// Dispatches on extension (.ply / .obj).
TriangleMesh read_mesh(const std::string& path);

}  // namespace p2r
