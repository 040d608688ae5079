#pragma once

// Adaptive viewpoint selection: sample candidate camera positions in the
// room, score them (visible-area + framing-IoU + normal-alignment), and
// greedily pick views per primitive until newly observed surface area is
// insignificant.

#include <map>
#include <vector>

#include "prim2room/geometry.hpp"
#include "prim2room/primitives.hpp"

namespace p2r {

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
};

Camera camera_from(const Intrinsics& intr, const Vec3& position, const Vec3& look_at);

struct ScoreWeights {
  double w_iou = 1.0;
  double w_norm = 0.5;
  int margin = 32;  // pixels; pipeline default is floor(width / 16)
};

/// All three terms are normalized to [0,1];
/// total = s_area + w_iou * s_iou + w_norm * s_norm.
struct ViewScore {
  double s_area = 0.0;
  double s_iou = 0.0;
  double s_norm = 0.0;
  double total = 0.0;
};

/// Per-instance accumulated set of observed triangle IDs.
class ObservedSet {
 public:
  void add(int32_t instance, std::span<const int32_t> triangles, size_t triangle_count);
  bool contains(int32_t instance, int32_t triangle) const;
  size_t count(int32_t instance) const;
  bool empty() const { return seen_.empty(); }

 private:
  std::map<int32_t, std::vector<uint8_t>> seen_;
};

struct SamplingParams {
  double grid_step = 0.25;
  std::vector<double> heights = {1.2, 1.6, 2.0};
  double wall_clearance = 0.2;
  double obstacle_inflation = 0.15;
};

struct SelectionParams {
  SamplingParams sampling;
  double tau_new = 0.05;  // stop when the best view's s_area drops below this
  int max_views = 6;
};

/// Grid of free positions at the sampling heights, each camera looking at
/// the target's geometric center with zero roll.
/// Throws SelectionError when no admissible position exists.
std::vector<Camera> sample_candidates(const ConditionScene& scene,
                                      const PrimitiveInstance& target,
                                      const SamplingParams& params, const Intrinsics& intr);

/// Scores one candidate view of `scene.instances[target_index]`.
ViewScore score_view(const Camera& cam, const ConditionScene& scene, size_t target_index,
                     const ObservedSet& observed, const ScoreWeights& weights);

enum class StopReason { coverage, max_views };

struct SelectionResult {
  std::vector<Camera> views;
  std::vector<ViewScore> scores;  // score of each view at its selection step
  StopReason stop = StopReason::coverage;
  ObservedSet observed;
  double observed_area = 0.0;  // cumulative over selected views
};

/// Greedy selection: repeatedly takes the candidate with the highest total
/// score (ties break toward the lower candidate index), accumulating the
/// observed set, until the best candidate's s_area falls below tau_new or
/// max_views is reached. Always returns at least one view.
SelectionResult select_viewpoints(const ConditionScene& scene, size_t target_index,
                                  const ScoreWeights& weights, const SelectionParams& params,
                                  const Intrinsics& intr);

}  // namespace p2r
