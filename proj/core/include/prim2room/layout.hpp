#pragma once

// The user's 2D room specification.
//
// Layout document schema (JSON):
//   {
//     "room": {"width": W, "depth": D, "height": H},
//     "seed": 1,                          // optional, default 0
//     "prompt": "a cozy living room",     // optional, default ""
//     "objects": [
//       {"category": "chair", "center": [x, y], "size": [w, d],
//        "rotation": 30.0,                // degrees about +Z, optional
//        "height": 0.9,                   // optional
//        "tags": ["wooden", "simple"]}    // optional
//     ]
//   }
//
// Room footprint spans [0, width] x [0, depth]; the floor is z = 0.

#include <optional>
#include <string>
#include <vector>

#include "prim2room/geometry.hpp"

namespace p2r {

struct ObjectBox {
  std::string category;
  double center_x = 0.0;
  double center_y = 0.0;
  double width = 0.0;   // extent along the box's local x before rotation
  double depth = 0.0;   // extent along the box's local y before rotation
  double rotation_deg = 0.0;
  std::optional<double> height;
  std::vector<std::string> tags;

  /// Footprint corners in world coordinates after rotation.
  std::array<Eigen::Vector2d, 4> footprint_corners() const;
};

struct RoomDims {
  double width = 0.0;
  double depth = 0.0;
  double height = 0.0;
};

struct Layout {
  RoomDims room;
  std::vector<ObjectBox> objects;
  uint64_t seed = 0;
  std::string prompt;
};

/// Parses and validates a layout document. Throws ParseError naming the bad
/// field, or ValidationError when an object lies outside the room.
Layout parse_layout(const std::string& json_text);
Layout load_layout(const std::string& path);

/// Re-checks all Layout invariants (also used after programmatic edits).
void validate_layout(const Layout& layout);

}  // namespace p2r
