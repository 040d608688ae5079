#include "prim2room/wire.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>

#include <nlohmann/json.hpp>

#include "prim2room/errors.hpp"
#include "prim2room/image_io.hpp"

namespace p2r {

using nlohmann::json;

namespace {

constexpr char kB64Chars[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::string require_string(const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string())
    throw ProtocolError(std::string("protocol: missing string field '") + field + "'");
  return j[field].get<std::string>();
}

json parse_message(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("protocol: invalid JSON message: ") + e.what());
  }
}

void check_error_reply(const json& j) {
  if (j.contains("error"))
    throw BackendError("backend replied with error: " + j["error"].dump());
}

std::vector<uint8_t> mask_to_png(const std::vector<uint8_t>& mask, int w, int h) {
  return encode_mask_png(mask, w, h);
}

std::vector<uint8_t> png_to_mask(std::span<const uint8_t> bytes, int& w, int& h) {
  const SemanticMap gray = decode_semantic_png(bytes);
  w = gray.width();
  h = gray.height();
  std::vector<uint8_t> mask(size_t(w) * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) mask[size_t(y) * w + x] = gray.at(x, y) >= 128 ? 1 : 0;
  return mask;
}

}  // namespace

std::string base64_encode(std::span<const uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 3 <= bytes.size(); i += 3) {
    const uint32_t v = (uint32_t(bytes[i]) << 16) | (uint32_t(bytes[i + 1]) << 8) | bytes[i + 2];
    out += kB64Chars[(v >> 18) & 63];
    out += kB64Chars[(v >> 12) & 63];
    out += kB64Chars[(v >> 6) & 63];
    out += kB64Chars[v & 63];
  }
  const size_t rem = bytes.size() - i;
  if (rem == 1) {
    const uint32_t v = uint32_t(bytes[i]) << 16;
    out += kB64Chars[(v >> 18) & 63];
    out += kB64Chars[(v >> 12) & 63];
    out += "==";
  } else if (rem == 2) {
    const uint32_t v = (uint32_t(bytes[i]) << 16) | (uint32_t(bytes[i + 1]) << 8);
    out += kB64Chars[(v >> 18) & 63];
    out += kB64Chars[(v >> 12) & 63];
    out += kB64Chars[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<uint8_t> base64_decode(const std::string& text) {
  std::vector<uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  uint32_t acc = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    const int v = b64_value(c);
    if (v < 0) throw ProtocolError("base64: invalid character");
    acc = (acc << 6) | uint32_t(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(uint8_t((acc >> bits) & 0xff));
    }
  }
  return out;
}

std::string encode_inpaint_request(const SynthesisRequest& req) {
  req.validate();
  json j;
  j["op"] = "inpaint";
  j["color"] = base64_encode(encode_color_png(req.partial));
  j["mask"] = base64_encode(mask_to_png(req.mask, req.partial.width(), req.partial.height()));
  j["semantic"] = base64_encode(encode_semantic_png(req.semantic));
  j["depth"] = base64_encode(encode_depth_png16(req.condition_depth));
  j["prompt"] = req.prompt;
  j["seed"] = req.seed;
  return j.dump();
}

SynthesisRequest decode_inpaint_request(const std::string& json_text) {
  const json j = parse_message(json_text);
  if (require_string(j, "op") != "inpaint") throw ProtocolError("protocol: expected op=inpaint");
  SynthesisRequest req;
  req.partial = decode_color_png(base64_decode(require_string(j, "color")));
  int mw = 0, mh = 0;
  req.mask = png_to_mask(base64_decode(require_string(j, "mask")), mw, mh);
  req.semantic = decode_semantic_png(base64_decode(require_string(j, "semantic")));
  req.condition_depth = decode_depth_png16(base64_decode(require_string(j, "depth")));
  req.prompt = require_string(j, "prompt");
  if (!j.contains("seed") || !j["seed"].is_number_integer())
    throw ProtocolError("protocol: missing integer field 'seed'");
  req.seed = j["seed"].get<uint64_t>();
  req.validate();
  if (mw != req.partial.width() || mh != req.partial.height())
    throw ProtocolError("protocol: mask resolution mismatch");
  return req;
}

std::string encode_inpaint_response(const ColorMap& color) {
  json j;
  j["color"] = base64_encode(encode_color_png(color));
  return j.dump();
}

ColorMap decode_inpaint_response(const std::string& json_text) {
  const json j = parse_message(json_text);
  check_error_reply(j);
  return decode_color_png(base64_decode(require_string(j, "color")));
}

std::string encode_depth_request(const ColorMap& color) {
  json j;
  j["op"] = "depth";
  j["color"] = base64_encode(encode_color_png(color));
  return j.dump();
}

ColorMap decode_depth_request(const std::string& json_text) {
  const json j = parse_message(json_text);
  if (require_string(j, "op") != "depth") throw ProtocolError("protocol: expected op=depth");
  return decode_color_png(base64_decode(require_string(j, "color")));
}

std::string encode_depth_response(const DepthMap& depth) {
  json j;
  j["depth"] = base64_encode(encode_depth_png16(depth));
  return j.dump();
}

DepthMap decode_depth_response(const std::string& json_text) {
  const json j = parse_message(json_text);
  check_error_reply(j);
  return decode_depth_png16(base64_decode(require_string(j, "depth")));
}

ProcessBackend::ProcessBackend(std::string command, double timeout_seconds)
    : command_(std::move(command)), timeout_seconds_(timeout_seconds) {}

ProcessBackend::~ProcessBackend() { shutdown(true); }

void ProcessBackend::ensure_running() {
  if (pid_ > 0) return;
  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0 || pipe(err_pipe) != 0)
    throw BackendError("backend: pipe() failed");
  const int pid = fork();
  if (pid < 0) throw BackendError("backend: fork() failed");
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    close(err_pipe[0]);
    close(err_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), nullptr);
    _exit(127);
  }
  pid_ = pid;
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  err_child_ = err_pipe[0];
  close(in_pipe[0]);
  close(out_pipe[1]);
  close(err_pipe[1]);
  fcntl(err_child_, F_SETFL, O_NONBLOCK);
}

void ProcessBackend::shutdown(bool kill_child) {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (err_child_ >= 0) close(err_child_);
  to_child_ = from_child_ = err_child_ = -1;
  if (pid_ > 0) {
    if (kill_child) kill(pid_, SIGKILL);
    int status = 0;
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::string ProcessBackend::transcript() const {
  if (stderr_tail_.empty()) return "(no stderr output)";
  return stderr_tail_.size() > 4096 ? stderr_tail_.substr(stderr_tail_.size() - 4096)
                                    : stderr_tail_;
}

std::string ProcessBackend::round_trip(const std::string& request_json) {
  ensure_running();
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration<double>(timeout_seconds_);

  // Send frame (child may block writing while we write; pipes are small, so
  // interleave draining stdout is unnecessary for our message sizes, but
  // stderr is drained opportunistically below).
  uint32_t len = uint32_t(request_json.size());
  uint8_t prefix[4] = {uint8_t(len & 0xff), uint8_t((len >> 8) & 0xff), uint8_t((len >> 16) & 0xff),
                       uint8_t((len >> 24) & 0xff)};
  auto write_all = [&](const uint8_t* data, size_t n) {
    size_t done = 0;
    while (done < n) {
      const ssize_t w = write(to_child_, data + done, n - done);
      if (w < 0) {
        shutdown(true);
        throw BackendError("backend: write failed (child exited?); stderr: " + transcript());
      }
      done += size_t(w);
    }
  };
  write_all(prefix, 4);
  write_all(reinterpret_cast<const uint8_t*>(request_json.data()), request_json.size());

  auto read_exact = [&](uint8_t* data, size_t n) {
    size_t done = 0;
    while (done < n) {
      const auto now = std::chrono::steady_clock::now();
      if (now >= deadline) {
        shutdown(true);
        throw BackendError("backend: timeout after " + std::to_string(timeout_seconds_) +
                           " s; stderr: " + transcript());
      }
      const int remain_ms = int(
          std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now).count());
      pollfd fds[2] = {{from_child_, POLLIN, 0}, {err_child_, POLLIN, 0}};
      const int rv = poll(fds, 2, std::max(1, remain_ms));
      if (rv < 0) {
        shutdown(true);
        throw BackendError("backend: poll failed");
      }
      if (fds[1].revents & POLLIN) {
        char buf[4096];
        const ssize_t r = read(err_child_, buf, sizeof(buf));
        if (r > 0) stderr_tail_.append(buf, size_t(r));
      }
      if (fds[0].revents & (POLLIN | POLLHUP)) {
        const ssize_t r = read(from_child_, data + done, n - done);
        if (r <= 0) {
          shutdown(true);
          throw ProtocolError("protocol: backend stream ended mid-message; stderr: " +
                              transcript());
        }
        done += size_t(r);
      }
    }
  };

  uint8_t reply_prefix[4];
  read_exact(reply_prefix, 4);
  const uint32_t reply_len = uint32_t(reply_prefix[0]) | (uint32_t(reply_prefix[1]) << 8) |
                             (uint32_t(reply_prefix[2]) << 16) | (uint32_t(reply_prefix[3]) << 24);
  if (reply_len == 0 || reply_len > kMaxFrameBytes) {
    shutdown(true);
    throw ProtocolError("protocol: implausible frame length " + std::to_string(reply_len));
  }
  std::string reply(reply_len, '\0');
  read_exact(reinterpret_cast<uint8_t*>(reply.data()), reply_len);
  return reply;
}

ColorMap ProcessBackend::inpaint(const SynthesisRequest& req) {
  return decode_inpaint_response(round_trip(encode_inpaint_request(req)));
}

DepthMap ProcessBackend::estimate_depth(const ColorMap& color,
                                        const std::optional<DepthContext>&) {
  return decode_depth_response(round_trip(encode_depth_request(color)));
}

}  // namespace p2r
