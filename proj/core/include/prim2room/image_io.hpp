#pragma once

// PNG serialization for the image buffer types.
//
// External formats:
//   color    8-bit RGB, channel = round(c * 255)
//   depth    16-bit grayscale, millimeters, 0 = invalid
//   semantic 8-bit grayscale category IDs (IDs above 255 are not representable)
//   mask     8-bit grayscale, 255 = true
//   normal   8-bit RGB, channel = round((n * 0.5 + 0.5) * 255) (debug only)

#include <cstdint>
#include <string>
#include <vector>

#include "prim2room/geometry.hpp"

namespace p2r {

std::vector<uint8_t> encode_color_png(const ColorMap& color);
ColorMap decode_color_png(std::span<const uint8_t> bytes);

std::vector<uint8_t> encode_depth_png16(const DepthMap& depth);
DepthMap decode_depth_png16(std::span<const uint8_t> bytes);

std::vector<uint8_t> encode_semantic_png(const SemanticMap& semantic);
SemanticMap decode_semantic_png(std::span<const uint8_t> bytes);

std::vector<uint8_t> encode_mask_png(const std::vector<uint8_t>& mask, int width, int height);
std::vector<uint8_t> encode_normal_png(const std::vector<Vec3>& normals, int width, int height);

void write_file(const std::string& path, std::span<const uint8_t> bytes);
std::vector<uint8_t> read_file(const std::string& path);

}  // namespace p2r
