#include "prim2room/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>

#include "prim2room/errors.hpp"
#include "prim2room/rng.hpp"

namespace p2r {

namespace {

Eigen::Vector3f hsv(double h_deg, double s, double v) {
  const double h = std::fmod(h_deg, 360.0) / 60.0;
  const double c = v * s;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  const double m = v - c;
  double r = 0, g = 0, b = 0;
  switch (int(h)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  return Eigen::Vector3f(float(r + m), float(g + m), float(b + m));
}

const std::array<Eigen::Vector3f, 24>& palette_table() {
  static const std::array<Eigen::Vector3f, 24> table = [] {
    std::array<Eigen::Vector3f, 24> t;
    t[0] = Eigen::Vector3f(0.5f, 0.5f, 0.5f);
    // Spread hues; alternate saturation/value so neighbors differ in chroma
    // direction, not just hue.
    for (int i = 1; i < 24; ++i) {
      const double hue = (i * 75.0);  // coprime stride covers the wheel
      const double s = (i % 3 == 0) ? 0.55 : 0.8;
      const double v = (i % 2 == 0) ? 0.85 : 0.65;
      t[size_t(i)] = hsv(hue, s, v);
    }
    return t;
  }();
  return table;
}

double category_uniform(uint64_t seed, uint16_t category, uint64_t salt) {
  std::mt19937_64 rng = make_rng(mix_seed(seed, category, salt));
  return std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(rng);
}

}  // namespace

void SynthesisRequest::validate() const {
  const int w = partial.width(), h = partial.height();
  if (w <= 0 || h <= 0) throw ValidationError("synthesis request: empty color map");
  if (semantic.width() != w || semantic.height() != h ||
      condition_depth.width() != w || condition_depth.height() != h)
    throw DimensionError("synthesis request: all maps must share one resolution");
  if (mask.size() != size_t(w) * h)
    throw DimensionError("synthesis request: mask size does not match resolution");
}

Eigen::Vector3f palette_color(uint16_t category_id) {
  return palette_table()[category_id % 24];
}

uint16_t palette_decode(const Eigen::Vector3f& color) {
  const float norm = color.norm();
  if (norm < 1e-6f) return 0;
  const Eigen::Vector3f dir = color / norm;
  uint16_t best = 0;
  float best_dot = -2.0f;
  for (uint16_t i = 0; i < 24; ++i) {
    const Eigen::Vector3f p = palette_table()[i].normalized();
    const float d = p.dot(dir);
    if (d > best_dot) {
      best_dot = d;
      best = i;
    }
  }
  return best;
}

ColorMap MockBackend::inpaint(const SynthesisRequest& req) {
  req.validate();
  const int w = req.partial.width(), h = req.partial.height();
  const double fx = params_.focal_factor * w;
  const double fy = fx;
  const double cx = w / 2.0, cy = h / 2.0;

  // Camera-frame point under the assumed intrinsics.
  auto point_at = [&](int x, int y) -> Vec3 {
    const double z = req.condition_depth.at(x, y);
    return Vec3(z * (x - cx) / fx, z * (y - cy) / fy, z);
  };

  ColorMap out = req.partial;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!req.mask[size_t(y) * w + x]) continue;
      const uint16_t cat = req.semantic.at(x, y);

      double lambert = 0.5;
      if (req.condition_depth.is_valid(x, y)) {
        const int xl = x > 0 ? x - 1 : x, xr = x < w - 1 ? x + 1 : x;
        const int yu = y > 0 ? y - 1 : y, yd = y < h - 1 ? y + 1 : y;
        if (xr != xl && yd != yu && req.condition_depth.is_valid(xl, y) &&
            req.condition_depth.is_valid(xr, y) && req.condition_depth.is_valid(x, yu) &&
            req.condition_depth.is_valid(x, yd)) {
          const Vec3 du = point_at(xr, y) - point_at(xl, y);
          const Vec3 dv = point_at(x, yd) - point_at(x, yu);
          Vec3 n = dv.cross(du);  // camera-facing for a front surface
          const double len = n.norm();
          if (len > 1e-12) {
            n /= len;
            const Vec3 ray = point_at(x, y).normalized();
            lambert = std::max(0.0, n.dot(-ray));
          }
        }
      }
      const double shade = 0.4 + 0.6 * lambert;

      const double phase_u = category_uniform(req.seed, cat, 0xA11CE);
      const double phase_v = category_uniform(req.seed, cat, 0xB0B);
      const double texture = std::sin(2.0 * M_PI * 3.0 * x / w + phase_u) *
                             std::cos(2.0 * M_PI * 3.0 * y / h + phase_v);
      const double mod = 1.0 + 0.1 * texture;

      const Eigen::Vector3f base = palette_color(cat);
      out.set(x, y, base * float(shade * mod));
    }
  }
  return out;
}

DepthMap MockBackend::estimate_depth(const ColorMap& color,
                                     const std::optional<DepthContext>& context) {
  if (!context || !context->condition)
    throw ConfigurationError("mock depth backend requires a condition depth context");
  const DepthMap& cond = *context->condition;
  if (cond.width() != color.width() || cond.height() != color.height())
    throw DimensionError("mock depth backend: condition resolution does not match color");

  const double s = context->strength;
  const double gamma = 1.0 + (params_.gamma_star - 1.0) * s;
  const double beta = params_.beta_star * s;
  const double amplitude = params_.ripple_amplitude * s;
  const double phase = category_uniform(context->seed, 0, 0xD1);

  const int w = cond.width(), h = cond.height();
  DepthMap out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!cond.is_valid(x, y)) continue;
      const double ripple =
          amplitude * std::sin(2.0 * M_PI * params_.ripple_periods * x / w + phase);
      out.set(x, y, (cond.at(x, y) - beta) / gamma + ripple);
    }
  return out;
}

ColorMap synthesize(const SynthesisRequest& req, SynthesisBackend& backend, size_t* violations) {
  req.validate();
  ColorMap out = backend.inpaint(req);
  if (out.width() != req.partial.width() || out.height() != req.partial.height())
    throw BackendError("synthesize: backend returned a wrong-sized color map");

  size_t violated = 0;
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      if (req.mask[size_t(y) * out.width() + x]) continue;
      const Eigen::Vector3f want = req.partial.at(x, y);
      if (out.at(x, y) != want) {
        ++violated;
        out.set(x, y, want);  // outside-mask pixels are the caller's, always
      }
    }
  if (violations) *violations = violated;
  if (violated > 0)
    std::cerr << "[synthesize] backend altered " << violated
              << " outside-mask pixels; restored from the request\n";
  return out;
}

DepthEstimate estimate_depth(const ColorMap& color, SynthesisBackend& backend,
                             const std::optional<DepthContext>& context) {
  DepthEstimate est;
  est.metric_depth = backend.estimate_depth(color, context);
  if (est.metric_depth.width() != color.width() || est.metric_depth.height() != color.height())
    throw BackendError("estimate_depth: backend returned a wrong-sized depth map");
  return est;
}

std::string build_prompt(const SemanticMap& semantic, const CategoryRegistry& registry,
                         const std::string& global_prompt) {
  std::map<uint16_t, size_t> counts;
  size_t valid = 0;
  for (uint16_t id : semantic.raw()) {
    if (id == 0) continue;
    ++counts[id];
    ++valid;
  }

  struct Entry {
    uint16_t id;
    size_t count;
  };
  std::vector<Entry> entries;
  for (const auto& [id, count] : counts) {
    if (id < kSemFirstObject) continue;
    if (double(count) < 0.01 * double(valid)) continue;  // under 1%: omitted
    if (!registry.contains(id)) continue;
    entries.push_back({id, count});
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.id < b.id;  // equal counts: registry-ID order
  });

  std::string prompt = global_prompt;
  auto append = [&](const std::string& text) {
    if (!prompt.empty()) prompt += ", ";
    prompt += text;
  };
  if (entries.empty()) {
    append("walls and floor");
  } else {
    std::string list = "containing ";
    for (size_t i = 0; i < entries.size(); ++i) {
      if (i > 0) list += ", ";
      list += registry.name_for(entries[i].id);
    }
    append(list);
  }
  return prompt;
}

}  // namespace p2r
