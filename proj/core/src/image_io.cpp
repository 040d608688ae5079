#include "prim2room/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "prim2room/errors.hpp"

namespace p2r {

namespace {

struct MemWriter {
  std::vector<uint8_t>* out;
};

void png_mem_write(png_structp png, png_bytep data, png_size_t len) {
  auto* w = static_cast<MemWriter*>(png_get_io_ptr(png));
  w->out->insert(w->out->end(), data, data + len);
}

void png_mem_flush(png_structp) {}

struct MemReader {
  const uint8_t* data;
  size_t size;
  size_t pos;
};

void png_mem_read(png_structp png, png_bytep data, png_size_t len) {
  auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
  if (r->pos + len > r->size) png_error(png, "read past end of PNG buffer");
  std::memcpy(data, r->data + r->pos, len);
  r->pos += len;
}

// Encodes interleaved rows. bit_depth 8 or 16; 16-bit rows are big-endian.
std::vector<uint8_t> encode_png(const std::vector<uint8_t>& rows_be, int width, int height,
                                int bit_depth, int color_type, int channels) {
  std::vector<uint8_t> out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png: create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png: encode failed");
  }
  MemWriter writer{&out};
  png_set_write_fn(png, &writer, png_mem_write, png_mem_flush);
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const size_t stride = size_t(width) * channels * (bit_depth / 8);
  std::vector<png_bytep> row_ptrs(height);
  for (int y = 0; y < height; ++y)
    row_ptrs[y] = const_cast<png_bytep>(rows_be.data() + size_t(y) * stride);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

struct DecodedPng {
  std::vector<uint8_t> rows;  // 16-bit data big-endian
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int channels = 0;
};

DecodedPng decode_png(std::span<const uint8_t> bytes, int expect_color_type, int expect_channels) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
    throw IoError("png: not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png: create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("png: create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: decode failed");
  }
  MemReader reader{bytes.data(), bytes.size(), 0};
  png_set_read_fn(png, &reader, png_mem_read);
  png_read_info(png, info);

  DecodedPng out;
  out.width = int(png_get_image_width(png, info));
  out.height = int(png_get_image_height(png, info));
  out.bit_depth = int(png_get_bit_depth(png, info));
  const int color_type = int(png_get_color_type(png, info));
  if (color_type != expect_color_type) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("png: unexpected color type");
  }
  out.channels = expect_channels;
  if (out.bit_depth < 8) png_set_packing(png);
  png_read_update_info(png, info);
  const size_t stride = png_get_rowbytes(png, info);
  out.rows.resize(stride * out.height);
  std::vector<png_bytep> row_ptrs(out.height);
  for (int y = 0; y < out.height; ++y) row_ptrs[y] = out.rows.data() + size_t(y) * stride;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

uint8_t quantize8(float v) {
  const float c = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
  return uint8_t(std::lround(c * 255.0f));
}

}  // namespace

std::vector<uint8_t> encode_color_png(const ColorMap& color) {
  const int w = color.width(), h = color.height();
  std::vector<uint8_t> rows(size_t(w) * h * 3);
  size_t i = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const Eigen::Vector3f c = color.at(x, y);
      rows[i++] = quantize8(c.x());
      rows[i++] = quantize8(c.y());
      rows[i++] = quantize8(c.z());
    }
  return encode_png(rows, w, h, 8, PNG_COLOR_TYPE_RGB, 3);
}

ColorMap decode_color_png(std::span<const uint8_t> bytes) {
  const DecodedPng d = decode_png(bytes, PNG_COLOR_TYPE_RGB, 3);
  if (d.bit_depth != 8) throw IoError("png: expected 8-bit RGB");
  ColorMap color(d.width, d.height);
  size_t i = 0;
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x) {
      const float r = d.rows[i++] / 255.0f;
      const float g = d.rows[i++] / 255.0f;
      const float b = d.rows[i++] / 255.0f;
      color.set(x, y, r, g, b);
    }
  return color;
}

std::vector<uint8_t> encode_depth_png16(const DepthMap& depth) {
  const int w = depth.width(), h = depth.height();
  std::vector<uint8_t> rows(size_t(w) * h * 2);
  size_t i = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      uint16_t mm = 0;
      if (depth.is_valid(x, y)) {
        const double v = std::lround(depth.at(x, y) * 1000.0);
        mm = uint16_t(v < 1.0 ? 1 : (v > 65535.0 ? 65535 : v));
      }
      rows[i++] = uint8_t(mm >> 8);  // PNG is big-endian
      rows[i++] = uint8_t(mm & 0xff);
    }
  return encode_png(rows, w, h, 16, PNG_COLOR_TYPE_GRAY, 1);
}

DepthMap decode_depth_png16(std::span<const uint8_t> bytes) {
  const DecodedPng d = decode_png(bytes, PNG_COLOR_TYPE_GRAY, 1);
  if (d.bit_depth != 16) throw IoError("png: expected 16-bit grayscale depth");
  DepthMap depth(d.width, d.height);
  size_t i = 0;
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x) {
      const uint16_t mm = uint16_t((d.rows[i] << 8) | d.rows[i + 1]);
      i += 2;
      if (mm > 0) depth.set(x, y, mm / 1000.0);
    }
  return depth;
}

std::vector<uint8_t> encode_semantic_png(const SemanticMap& semantic) {
  const int w = semantic.width(), h = semantic.height();
  std::vector<uint8_t> rows(size_t(w) * h);
  size_t i = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const uint16_t id = semantic.at(x, y);
      rows[i++] = uint8_t(id > 255 ? 255 : id);
    }
  return encode_png(rows, w, h, 8, PNG_COLOR_TYPE_GRAY, 1);
}

SemanticMap decode_semantic_png(std::span<const uint8_t> bytes) {
  const DecodedPng d = decode_png(bytes, PNG_COLOR_TYPE_GRAY, 1);
  if (d.bit_depth != 8) throw IoError("png: expected 8-bit grayscale semantic");
  SemanticMap sem(d.width, d.height);
  size_t i = 0;
  for (int y = 0; y < d.height; ++y)
    for (int x = 0; x < d.width; ++x) sem.set(x, y, d.rows[i++]);
  return sem;
}

std::vector<uint8_t> encode_mask_png(const std::vector<uint8_t>& mask, int width, int height) {
  if (mask.size() != size_t(width) * height) throw DimensionError("mask size mismatch");
  std::vector<uint8_t> rows(mask.size());
  for (size_t i = 0; i < mask.size(); ++i) rows[i] = mask[i] ? 255 : 0;
  return encode_png(rows, width, height, 8, PNG_COLOR_TYPE_GRAY, 1);
}

std::vector<uint8_t> encode_normal_png(const std::vector<Vec3>& normals, int width, int height) {
  if (normals.size() != size_t(width) * height) throw DimensionError("normal size mismatch");
  std::vector<uint8_t> rows(normals.size() * 3);
  size_t i = 0;
  for (const Vec3& n : normals) {
    rows[i++] = quantize8(float(n.x() * 0.5 + 0.5));
    rows[i++] = quantize8(float(n.y() * 0.5 + 0.5));
    rows[i++] = quantize8(float(n.z() * 0.5 + 0.5));
  }
  return encode_png(rows, width, height, 8, PNG_COLOR_TYPE_RGB, 3);
}

void write_file(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!f) throw IoError("write failed: " + path);
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  if (!f) throw IoError("cannot open: " + path);
  const std::streamsize size = f.tellg();
  f.seekg(0);
  std::vector<uint8_t> bytes(static_cast<size_t>(size), 0);
  f.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!f) throw IoError("read failed: " + path);
  return bytes;
}

}  // namespace p2r
