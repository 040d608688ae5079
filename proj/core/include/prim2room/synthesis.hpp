#pragma once

// Pluggable synthesis interfaces: color inpainting and metric depth
// estimation. The built-in mock backends are fully deterministic and
// recomputable from the request maps, which is what makes the pipeline
// verifiable without any generative model. Real models attach out of
// process via the wire protocol (see wire.hpp).

#include <functional>
#include <optional>
#include <string>

#include "prim2room/geometry.hpp"
#include "prim2room/primitives.hpp"

namespace p2r {

struct SynthesisRequest {
  ColorMap partial;            // defined outside the mask
  std::vector<uint8_t> mask;   // true = to generate
  SemanticMap semantic;
  DepthMap condition_depth;
  std::string prompt;
  uint64_t seed = 0;

  void validate() const;  // resolutions agree, mask sized to the maps
};

struct DepthEstimate {
  DepthMap metric_depth;
};

/// Context for depth backends that condition on rendered depth. The mock
/// backend requires it; a real monocular model may ignore it.
struct DepthContext {
  const DepthMap* condition = nullptr;
  uint64_t seed = 0;
  double strength = 1.0;  // 0 = return the condition unchanged
};

class SynthesisBackend {
 public:
  virtual ~SynthesisBackend() = default;
  virtual ColorMap inpaint(const SynthesisRequest& req) = 0;
  virtual DepthMap estimate_depth(const ColorMap& color,
                                  const std::optional<DepthContext>& context) = 0;
};

/// Fixed 24-entry color table keyed by category ID (index = id % 24).
/// Entry 0 is neutral gray; entries stay below 0.9 per channel so the mock's
/// +-10% texture modulation never clamps.
Eigen::Vector3f palette_color(uint16_t category_id);

/// Nearest palette entry by chroma direction (shading and texture modulation
/// are scalar multipliers, so direction identifies the entry).
uint16_t palette_decode(const Eigen::Vector3f& color);

struct MockBackendParams {
  /// Shading geometry is derived from the condition depth under these
  /// assumed intrinsics (the pipeline defaults): fx = fy = focal_factor * w,
  /// principal point centered.
  double focal_factor = 0.9;
  /// Depth distortion at strength 1: gamma* = 1.25, beta* = 0.2 m, plus a
  /// zero-mean ripple of 0.03 m amplitude, two periods across the image,
  /// seeded phase.
  double gamma_star = 1.25;
  double beta_star = 0.2;
  double ripple_amplitude = 0.03;
  double ripple_periods = 2.0;
};

/// Deterministic stand-ins: inpainting paints masked pixels with the
/// category palette color shaded by 0.4 + 0.6 * max(0, normal . (-ray)) and
/// modulated +-10% by a seeded per-category procedural texture; depth
/// estimation returns an affinely distorted, rippled copy of the condition
/// depth (invertible by scale-shift alignment up to the ripple).
class MockBackend : public SynthesisBackend {
 public:
  explicit MockBackend(const MockBackendParams& params = {}) : params_(params) {}

  ColorMap inpaint(const SynthesisRequest& req) override;
  DepthMap estimate_depth(const ColorMap& color,
                          const std::optional<DepthContext>& context) override;

  const MockBackendParams& params() const { return params_; }

 private:
  MockBackendParams params_;
};

/// Runs the backend and defensively restores outside-mask pixels bit-exactly
/// from the request; counts (and reports via `violations`) any pixel the
/// backend altered against the contract.
ColorMap synthesize(const SynthesisRequest& req, SynthesisBackend& backend,
                    size_t* violations = nullptr);

DepthEstimate estimate_depth(const ColorMap& color, SynthesisBackend& backend,
                             const std::optional<DepthContext>& context);

/// "<global prompt>, containing <categories by descending pixel count>";
/// object categories under 1% of valid (nonzero) pixels are omitted; views
/// with no qualifying object category mention walls and floor instead.
std::string build_prompt(const SemanticMap& semantic, const CategoryRegistry& registry,
                         const std::string& global_prompt);

}  // namespace p2r
