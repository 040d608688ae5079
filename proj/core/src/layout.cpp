#include "prim2room/layout.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prim2room/errors.hpp"

namespace p2r {

using nlohmann::json;

namespace {

double require_number(const json& j, const std::string& field) {
  if (!j.contains(field) || !j[field].is_number())
    throw ParseError("layout: missing or non-numeric field '" + field + "'");
  return j[field].get<double>();
}

}  // namespace

std::array<Eigen::Vector2d, 4> ObjectBox::footprint_corners() const {
  const double rad = rotation_deg * M_PI / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double hw = width / 2.0, hd = depth / 2.0;
  std::array<Eigen::Vector2d, 4> corners;
  const double lx[4] = {-hw, hw, hw, -hw};
  const double ly[4] = {-hd, -hd, hd, hd};
  for (int k = 0; k < 4; ++k)
    corners[k] = Eigen::Vector2d(center_x + c * lx[k] - s * ly[k], center_y + s * lx[k] + c * ly[k]);
  return corners;
}

Layout parse_layout(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("layout: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("layout: document must be a JSON object");
  if (!doc.contains("room") || !doc["room"].is_object())
    throw ParseError("layout: missing object field 'room'");

  Layout layout;
  const json& room = doc["room"];
  layout.room.width = require_number(room, "width");
  layout.room.depth = require_number(room, "depth");
  layout.room.height = require_number(room, "height");

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_integer()) throw ParseError("layout: field 'seed' must be an integer");
    layout.seed = doc["seed"].get<uint64_t>();
  }
  if (doc.contains("prompt")) {
    if (!doc["prompt"].is_string()) throw ParseError("layout: field 'prompt' must be a string");
    layout.prompt = doc["prompt"].get<std::string>();
  }

  if (doc.contains("objects")) {
    if (!doc["objects"].is_array()) throw ParseError("layout: field 'objects' must be an array");
    for (size_t i = 0; i < doc["objects"].size(); ++i) {
      const json& jo = doc["objects"][i];
      const std::string where = "objects[" + std::to_string(i) + "]";
      if (!jo.is_object()) throw ParseError("layout: " + where + " must be an object");
      ObjectBox box;
      if (!jo.contains("category") || !jo["category"].is_string())
        throw ParseError("layout: " + where + ".category missing or not a string");
      box.category = jo["category"].get<std::string>();
      auto read_pair = [&](const char* field, double& a, double& b) {
        if (!jo.contains(field) || !jo[field].is_array() || jo[field].size() != 2 ||
            !jo[field][0].is_number() || !jo[field][1].is_number())
          throw ParseError("layout: " + where + "." + field + " must be [number, number]");
        a = jo[field][0].get<double>();
        b = jo[field][1].get<double>();
      };
      read_pair("center", box.center_x, box.center_y);
      read_pair("size", box.width, box.depth);
      if (jo.contains("rotation")) {
        if (!jo["rotation"].is_number())
          throw ParseError("layout: " + where + ".rotation must be a number");
        box.rotation_deg = jo["rotation"].get<double>();
      }
      if (jo.contains("height")) {
        if (!jo["height"].is_number())
          throw ParseError("layout: " + where + ".height must be a number");
        box.height = jo["height"].get<double>();
      }
      if (jo.contains("tags")) {
        if (!jo["tags"].is_array()) throw ParseError("layout: " + where + ".tags must be an array");
        for (const auto& t : jo["tags"]) {
          if (!t.is_string()) throw ParseError("layout: " + where + ".tags entries must be strings");
          box.tags.push_back(t.get<std::string>());
        }
      }
      layout.objects.push_back(std::move(box));
    }
  }

  validate_layout(layout);
  return layout;
}

Layout load_layout(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot open layout: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_layout(ss.str());
}

void validate_layout(const Layout& layout) {
  if (!(layout.room.width > 0.0 && layout.room.depth > 0.0 && layout.room.height > 0.0))
    throw ValidationError("layout: room dimensions must be positive");
  for (size_t i = 0; i < layout.objects.size(); ++i) {
    const ObjectBox& box = layout.objects[i];
    const std::string where = "objects[" + std::to_string(i) + "]";
    if (box.category.empty()) throw ValidationError("layout: " + where + ".category is empty");
    if (!(box.width > 0.0 && box.depth > 0.0))
      throw ValidationError("layout: " + where + " footprint must be positive");
    if (box.height && !(*box.height > 0.0))
      throw ValidationError("layout: " + where + ".height must be positive");
    constexpr double kEps = 1e-9;
    for (const auto& corner : box.footprint_corners()) {
      if (corner.x() < -kEps || corner.x() > layout.room.width + kEps || corner.y() < -kEps ||
          corner.y() > layout.room.depth + kEps)
        throw ValidationError("layout: " + where + " footprint outside room bounds");
    }
  }
}

}  // namespace p2r
