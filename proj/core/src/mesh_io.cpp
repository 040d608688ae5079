#include "prim2room/mesh_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "prim2room/errors.hpp"

namespace p2r {

namespace {

uint8_t to_byte(float c) {
  const float v = c < 0.0f ? 0.0f : (c > 1.0f ? 1.0f : c);
  return uint8_t(std::lround(v * 255.0f));
}

std::string lower_ext(const std::string& path) {
  const size_t dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

std::string mesh_to_ply(const TriangleMesh& mesh) {
  mesh.validate();
  std::string out;
  out.reserve(mesh.vertex_count() * 48 + mesh.triangle_count() * 16 + 512);
  char line[160];
  std::snprintf(line, sizeof(line),
                "ply\nformat ascii 1.0\ncomment prim2room scene mesh\n"
                "element vertex %zu\n"
                "property float x\nproperty float y\nproperty float z\n"
                "property uchar red\nproperty uchar green\nproperty uchar blue\n"
                "property int semantic\n"
                "element face %zu\nproperty list uchar int vertex_indices\nend_header\n",
                mesh.vertex_count(), mesh.triangle_count());
  out += line;
  for (size_t i = 0; i < mesh.vertex_count(); ++i) {
    const Vec3& p = mesh.positions[i];
    const Eigen::Vector3f& c = mesh.colors[i];
    std::snprintf(line, sizeof(line), "%.6f %.6f %.6f %u %u %u %d\n", p.x(), p.y(), p.z(),
                  to_byte(c.x()), to_byte(c.y()), to_byte(c.z()), int(mesh.semantics[i]));
    out += line;
  }
  for (const auto& t : mesh.triangles) {
    std::snprintf(line, sizeof(line), "3 %d %d %d\n", t[0], t[1], t[2]);
    out += line;
  }
  return out;
}

void write_ply(const std::string& path, const TriangleMesh& mesh) {
  const std::string ply = mesh_to_ply(mesh);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(ply.data(), std::streamsize(ply.size()));
  if (!f) throw IoError("write failed: " + path);
}

TriangleMesh read_ply(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path);
  std::string line;
  if (!std::getline(f, line) || line.substr(0, 3) != "ply") throw ParseError("ply: bad magic in " + path);

  size_t n_vertices = 0, n_faces = 0;
  struct Prop {
    std::string name;
  };
  std::vector<Prop> vertex_props;
  bool in_vertex = false;
  bool ascii = false;
  while (std::getline(f, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      ascii = (fmt == "ascii");
    } else if (tok == "element") {
      std::string what;
      size_t count;
      ss >> what >> count;
      if (what == "vertex") {
        n_vertices = count;
        in_vertex = true;
      } else {
        if (what == "face") n_faces = count;
        in_vertex = false;
      }
    } else if (tok == "property" && in_vertex) {
      std::string type, name;
      ss >> type >> name;
      if (type == "list") continue;
      vertex_props.push_back({name});
    } else if (tok == "end_header") {
      break;
    }
  }
  if (!ascii) throw ParseError("ply: only ASCII PLY is supported: " + path);

  int ix = -1, iy = -1, iz = -1, ir = -1, ig = -1, ib = -1, isem = -1;
  for (size_t i = 0; i < vertex_props.size(); ++i) {
    const std::string& n = vertex_props[i].name;
    if (n == "x") ix = int(i);
    else if (n == "y") iy = int(i);
    else if (n == "z") iz = int(i);
    else if (n == "red") ir = int(i);
    else if (n == "green") ig = int(i);
    else if (n == "blue") ib = int(i);
    else if (n == "semantic") isem = int(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw ParseError("ply: missing x/y/z properties: " + path);

  TriangleMesh mesh;
  mesh.positions.reserve(n_vertices);
  std::vector<double> vals(vertex_props.size());
  for (size_t v = 0; v < n_vertices; ++v) {
    if (!std::getline(f, line)) throw ParseError("ply: truncated vertex list: " + path);
    std::istringstream ss(line);
    for (size_t i = 0; i < vertex_props.size(); ++i)
      if (!(ss >> vals[i])) throw ParseError("ply: bad vertex line: " + path);
    mesh.positions.emplace_back(vals[ix], vals[iy], vals[iz]);
    Eigen::Vector3f color(0.7f, 0.7f, 0.7f);
    if (ir >= 0 && ig >= 0 && ib >= 0)
      color = Eigen::Vector3f(float(vals[ir] / 255.0), float(vals[ig] / 255.0), float(vals[ib] / 255.0));
    mesh.colors.push_back(color);
    mesh.semantics.push_back(isem >= 0 ? uint16_t(vals[isem]) : 0);
  }
  for (size_t t = 0; t < n_faces; ++t) {
    if (!std::getline(f, line)) throw ParseError("ply: truncated face list: " + path);
    std::istringstream ss(line);
    int count;
    if (!(ss >> count) || count < 3) throw ParseError("ply: bad face line: " + path);
    std::vector<int> idx(count);
    for (int k = 0; k < count; ++k)
      if (!(ss >> idx[k])) throw ParseError("ply: bad face line: " + path);
    for (int k = 2; k < count; ++k) mesh.add_triangle(idx[0], idx[k - 1], idx[k]);
  }
  mesh.validate();
  return mesh;
}

TriangleMesh read_obj(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open: " + path);
  TriangleMesh mesh;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "v") {
      double x, y, z;
      if (!(ss >> x >> y >> z)) throw ParseError("obj: bad vertex line: " + path);
      mesh.positions.emplace_back(x, y, z);
      mesh.colors.emplace_back(0.7f, 0.7f, 0.7f);
      mesh.semantics.push_back(0);
    } else if (tok == "f") {
      std::vector<int> idx;
      std::string ref;
      while (ss >> ref) {
        // "v", "v/vt", "v//vn", "v/vt/vn" forms; we only keep the position.
        const size_t slash = ref.find('/');
        const int v = std::stoi(slash == std::string::npos ? ref : ref.substr(0, slash));
        if (v <= 0) throw ParseError("obj: only positive indices supported: " + path);
        idx.push_back(v - 1);
      }
      if (idx.size() < 3) throw ParseError("obj: face with fewer than 3 vertices: " + path);
      for (size_t k = 2; k < idx.size(); ++k) mesh.add_triangle(idx[0], idx[k - 1], idx[k]);
    }
  }
  mesh.validate();
  return mesh;
}

TriangleMesh read_mesh(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "ply") return read_ply(path);
  if (ext == "obj") return read_obj(path);
  throw ParseError("unsupported mesh format (need .ply or .obj): " + path);
}

}  // namespace p2r
