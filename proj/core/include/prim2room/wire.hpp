#pragma once

// Wire protocol for out-of-process synthesis backends.
//
// Framing: each message is a 4-byte little-endian length prefix followed by
// that many bytes of UTF-8 JSON. Requests:
//   {"op":"inpaint","color":b64-PNG,"mask":b64-PNG,"semantic":b64-PNG,
//    "depth":b64-PNG16,"prompt":str,"seed":int}      -> {"color":b64-PNG}
//   {"op":"depth","color":b64-PNG}                   -> {"depth":b64-PNG16}
// Depth PNGs are 16-bit grayscale millimeters, 0 = invalid. A backend may
// reply {"error": str}. Default per-call timeout: 300 s.

#include <string>
#include <vector>

#include "prim2room/synthesis.hpp"

namespace p2r {

std::string base64_encode(std::span<const uint8_t> bytes);
std::vector<uint8_t> base64_decode(const std::string& text);

/// Maximum accepted frame size (guards against garbage length prefixes).
constexpr uint32_t kMaxFrameBytes = 256u << 20;

std::string encode_inpaint_request(const SynthesisRequest& req);
SynthesisRequest decode_inpaint_request(const std::string& json_text);
std::string encode_inpaint_response(const ColorMap& color);
ColorMap decode_inpaint_response(const std::string& json_text);

std::string encode_depth_request(const ColorMap& color);
ColorMap decode_depth_request(const std::string& json_text);
std::string encode_depth_response(const DepthMap& depth);
DepthMap decode_depth_response(const std::string& json_text);

/// Spawns `command` through /bin/sh and speaks the protocol over its
/// standard streams. Calls are serial; a timeout kills the child and raises
/// BackendError carrying the captured stderr transcript.
class ProcessBackend : public SynthesisBackend {
 public:
  explicit ProcessBackend(std::string command, double timeout_seconds = 300.0);
  ~ProcessBackend() override;

  ProcessBackend(const ProcessBackend&) = delete;
  ProcessBackend& operator=(const ProcessBackend&) = delete;

  ColorMap inpaint(const SynthesisRequest& req) override;
  DepthMap estimate_depth(const ColorMap& color,
                          const std::optional<DepthContext>& context) override;

 private:
  void ensure_running();
  void shutdown(bool kill_child);
  std::string round_trip(const std::string& request_json);
  std::string transcript() const;

  std::string command_;
  double timeout_seconds_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  int err_child_ = -1;
  std::string stderr_tail_;
};

}  // namespace p2r
