#pragma once

// Foundational geometric types shared by all modules.
//
// Conventions (fixed once, used everywhere):
//   * World frame: right-handed, +Z up, floor at z = 0, units are meters.
//     Room footprints span [0, width] x [0, depth] on the floor plane.
//   * Camera frame: +z forward, +x right, +y down in the image.
//   * Camera pose is the world-from-camera rigid transform.
//   * Pixel (u, v) samples the continuous image coordinate (u, v) exactly;
//     u = fx * X/Z + cx with X, Z in the camera frame.
//   * Invalid depth pixels store 0.0; the validity mask is authoritative.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "prim2room/errors.hpp"

namespace p2r {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec2i = Eigen::Vector2i;

// Reserved semantic category IDs. Object categories start at kSemFirstObject.
constexpr uint16_t kSemEmpty = 0;
constexpr uint16_t kSemFloor = 1;
constexpr uint16_t kSemCeiling = 2;
constexpr uint16_t kSemWall = 3;
constexpr uint16_t kSemFirstObject = 16;

inline bool is_background_category(uint16_t id) { return id < kSemFirstObject; }

/// Rigid transform `p_out = R * p_in + t`.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const {
    RigidTransform inv;
    inv.rotation = rotation.transpose();
    inv.translation = -(inv.rotation * translation);
    return inv;
  }
  RigidTransform compose(const RigidTransform& inner) const {
    RigidTransform out;
    out.rotation = rotation * inner.rotation;
    out.translation = rotation * inner.translation + translation;
    return out;
  }
};

/// Pinhole camera. `pose` maps camera-frame points into the world frame.
struct Camera {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  RigidTransform pose;

  Vec3 origin() const { return pose.translation; }
  Vec3 forward() const { return pose.rotation.col(2); }

  /// Throws ValidationError when an invariant is broken.
  void validate() const;
};

/// Builds a camera at `position` looking at `target` with zero roll about the
/// world up axis. Falls back to +X as image-right when looking straight up
/// or down.
Camera look_at_camera(const Vec3& position, const Vec3& target, double fx, double fy,
                      double cx, double cy, int width, int height);

class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height) : w_(width), h_(height), values_(size_t(width) * height, 0.0) {}

  int width() const { return w_; }
  int height() const { return h_; }
  size_t pixel_count() const { return values_.size(); }

  bool is_valid(int x, int y) const { return values_[idx(x, y)] > 0.0; }
  double at(int x, int y) const { return values_[idx(x, y)]; }
  void set(int x, int y, double depth) { values_[idx(x, y)] = depth > 0.0 ? depth : 0.0; }
  void invalidate(int x, int y) { values_[idx(x, y)] = 0.0; }

  size_t valid_count() const;
  std::span<const double> raw() const { return values_; }
  std::span<double> raw() { return values_; }

  bool same_resolution(const DepthMap& o) const { return w_ == o.w_ && h_ == o.h_; }

 private:
  size_t idx(int x, int y) const { return size_t(y) * w_ + x; }
  int w_ = 0, h_ = 0;
  // Invalid pixels hold the 0.0 sentinel; any stored value > 0 is valid.
  std::vector<double> values_;
};

class ColorMap {
 public:
  ColorMap() = default;
  ColorMap(int width, int height)
      : w_(width), h_(height), rgb_(size_t(width) * height * 3, 0.0f) {}

  int width() const { return w_; }
  int height() const { return h_; }

  Eigen::Vector3f at(int x, int y) const {
    const size_t i = idx(x, y);
    return {rgb_[i], rgb_[i + 1], rgb_[i + 2]};
  }
  void set(int x, int y, float r, float g, float b) {
    const size_t i = idx(x, y);
    rgb_[i] = clamp01(r);
    rgb_[i + 1] = clamp01(g);
    rgb_[i + 2] = clamp01(b);
  }
  void set(int x, int y, const Eigen::Vector3f& c) { set(x, y, c.x(), c.y(), c.z()); }

  std::span<const float> raw() const { return rgb_; }
  bool same_resolution(const ColorMap& o) const { return w_ == o.w_ && h_ == o.h_; }

 private:
  static float clamp01(float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); }
  size_t idx(int x, int y) const { return (size_t(y) * w_ + x) * 3; }
  int w_ = 0, h_ = 0;
  std::vector<float> rgb_;
};

class SemanticMap {
 public:
  SemanticMap() = default;
  SemanticMap(int width, int height) : w_(width), h_(height), ids_(size_t(width) * height, 0) {}

  int width() const { return w_; }
  int height() const { return h_; }

  uint16_t at(int x, int y) const { return ids_[size_t(y) * w_ + x]; }
  void set(int x, int y, uint16_t id) { ids_[size_t(y) * w_ + x] = id; }

  std::span<const uint16_t> raw() const { return ids_; }
  bool same_resolution(const SemanticMap& o) const { return w_ == o.w_ && h_ == o.h_; }

 private:
  int w_ = 0, h_ = 0;
  std::vector<uint16_t> ids_;
};

/// Indexed triangle mesh with per-vertex color and semantic label.
struct TriangleMesh {
  std::vector<Vec3> positions;
  std::vector<Eigen::Vector3f> colors;     // RGB in [0,1], same length as positions
  std::vector<uint16_t> semantics;         // category IDs, same length as positions
  std::vector<std::array<int, 3>> triangles;

  size_t vertex_count() const { return positions.size(); }
  size_t triangle_count() const { return triangles.size(); }
  bool empty() const { return triangles.empty(); }

  int add_vertex(const Vec3& p, const Eigen::Vector3f& color, uint16_t semantic);
  void add_triangle(int a, int b, int c);

  Vec3 triangle_normal(size_t t) const;  // unit normal, zero for degenerate
  double triangle_area(size_t t) const;

  /// Axis-aligned bounds; throws ValidationError on an empty mesh.
  void bounds(Vec3& lo, Vec3& hi) const;

  void transform(const RigidTransform& rt);
  void scale(const Vec3& factors);    // anisotropic, about the origin
  void translate(const Vec3& delta);

  /// Throws ValidationError when indices are out of range, coordinates are
  /// non-finite, or a triangle repeats a vertex index.
  void validate() const;
};

/// Points unprojected from a depth map. `rays[i]` is the unit direction from
/// the camera origin to `points[i]` in the world frame; `pixels[i]` is the
/// source pixel.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> rays;
  std::vector<Vec2i> pixels;

  size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

/// One point per valid pixel: pose * (z*(u-cx)/fx, z*(v-cy)/fy, z).
/// Throws DimensionError when the depth resolution does not match the camera.
PointCloud unproject(const DepthMap& depth, const Camera& cam);

struct Projection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;  // camera-frame z
  bool in_front = false;
};

/// Projects a world point; `in_front` is false when depth <= 0.
Projection project(const Vec3& point, const Camera& cam);

/// Sum of triangle areas, optionally restricted to a subset of triangle IDs.
double mesh_surface_area(const TriangleMesh& mesh);
double mesh_surface_area(const TriangleMesh& mesh, std::span<const int> triangle_subset);

}  // namespace p2r
