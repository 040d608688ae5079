#include "prim2room/geometry.hpp"

#include <cmath>
#include <limits>

namespace p2r {

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("camera: focal lengths must be > 0");
  if (width <= 0 || height <= 0) throw ValidationError("camera: resolution must be positive");
  if (!(cx > 0.0 && cx < width)) throw ValidationError("camera: cx out of (0, w)");
  if (!(cy > 0.0 && cy < height)) throw ValidationError("camera: cy out of (0, h)");
  const Mat3& r = pose.rotation;
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9) throw ValidationError("camera: rotation not orthonormal");
  if (std::abs(r.determinant() - 1.0) > 1e-9)
    throw ValidationError("camera: rotation determinant != +1");
  if (!pose.translation.allFinite()) throw ValidationError("camera: non-finite translation");
}

Camera look_at_camera(const Vec3& position, const Vec3& target, double fx, double fy,
                      double cx, double cy, int width, int height) {
  Camera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = cx;
  cam.cy = cy;
  cam.width = width;
  cam.height = height;

  Vec3 fwd = target - position;
  const double len = fwd.norm();
  if (len < 1e-12) throw ValidationError("look_at_camera: target coincides with position");
  fwd /= len;

  const Vec3 world_up(0.0, 0.0, 1.0);
  Vec3 right;
  if (std::abs(fwd.dot(world_up)) > 1.0 - 1e-9) {
    right = Vec3(1.0, 0.0, 0.0);  // straight up/down: keep world +X as image right
  } else {
    right = fwd.cross(world_up).normalized();
  }
  const Vec3 down = fwd.cross(right).normalized();

  cam.pose.rotation.col(0) = right;
  cam.pose.rotation.col(1) = down;
  cam.pose.rotation.col(2) = fwd;
  cam.pose.translation = position;
  return cam;
}

size_t DepthMap::valid_count() const {
  size_t n = 0;
  for (double v : values_)
    if (v > 0.0) ++n;
  return n;
}

int TriangleMesh::add_vertex(const Vec3& p, const Eigen::Vector3f& color, uint16_t semantic) {
  positions.push_back(p);
  colors.push_back(color);
  semantics.push_back(semantic);
  return int(positions.size()) - 1;
}

void TriangleMesh::add_triangle(int a, int b, int c) { triangles.push_back({a, b, c}); }

Vec3 TriangleMesh::triangle_normal(size_t t) const {
  const auto& tri = triangles[t];
  const Vec3 n = (positions[tri[1]] - positions[tri[0]]).cross(positions[tri[2]] - positions[tri[0]]);
  const double len = n.norm();
  if (len < 1e-15) return Vec3::Zero();
  return n / len;
}

double TriangleMesh::triangle_area(size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * (positions[tri[1]] - positions[tri[0]])
                   .cross(positions[tri[2]] - positions[tri[0]])
                   .norm();
}

void TriangleMesh::bounds(Vec3& lo, Vec3& hi) const {
  if (positions.empty()) throw ValidationError("mesh bounds: empty mesh");
  lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  hi = -lo;
  for (const Vec3& p : positions) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
}

void TriangleMesh::transform(const RigidTransform& rt) {
  for (Vec3& p : positions) p = rt.apply(p);
}

void TriangleMesh::scale(const Vec3& factors) {
  for (Vec3& p : positions) p = p.cwiseProduct(factors);
}

void TriangleMesh::translate(const Vec3& delta) {
  for (Vec3& p : positions) p += delta;
}

void TriangleMesh::validate() const {
  if (colors.size() != positions.size() || semantics.size() != positions.size())
    throw ValidationError("mesh: attribute arrays must match vertex count");
  for (const Vec3& p : positions)
    if (!p.allFinite()) throw ValidationError("mesh: non-finite vertex coordinate");
  const int n = int(positions.size());
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k)
      if (t[k] < 0 || t[k] >= n) throw ValidationError("mesh: triangle index out of range");
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
      throw ValidationError("mesh: degenerate triangle with repeated vertex index");
  }
}

PointCloud unproject(const DepthMap& depth, const Camera& cam) {
  if (depth.width() != cam.width || depth.height() != cam.height)
    throw DimensionError("unproject: depth resolution does not match camera");
  PointCloud pc;
  pc.points.reserve(depth.valid_count());
  pc.rays.reserve(pc.points.capacity());
  pc.pixels.reserve(pc.points.capacity());
  const Vec3 origin = cam.origin();
  for (int v = 0; v < depth.height(); ++v) {
    for (int u = 0; u < depth.width(); ++u) {
      if (!depth.is_valid(u, v)) continue;
      const double z = depth.at(u, v);
      const Vec3 cam_pt(z * (u - cam.cx) / cam.fx, z * (v - cam.cy) / cam.fy, z);
      const Vec3 world = cam.pose.apply(cam_pt);
      pc.points.push_back(world);
      pc.rays.push_back((world - origin).normalized());
      pc.pixels.emplace_back(u, v);
    }
  }
  return pc;
}

Projection project(const Vec3& point, const Camera& cam) {
  const Vec3 c = cam.pose.inverse().apply(point);
  Projection pr;
  pr.depth = c.z();
  if (c.z() <= 0.0) {
    pr.in_front = false;
    return pr;
  }
  pr.in_front = true;
  pr.u = cam.fx * c.x() / c.z() + cam.cx;
  pr.v = cam.fy * c.y() / c.z() + cam.cy;
  return pr;
}

double mesh_surface_area(const TriangleMesh& mesh) {
  double area = 0.0;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) area += mesh.triangle_area(t);
  return area;
}

double mesh_surface_area(const TriangleMesh& mesh, std::span<const int> triangle_subset) {
  double area = 0.0;
  for (int t : triangle_subset) {
    if (t < 0 || size_t(t) >= mesh.triangles.size())
      throw ValidationError("mesh_surface_area: triangle ID out of range");
    area += mesh.triangle_area(size_t(t));
  }
  return area;
}

}  // namespace p2r
