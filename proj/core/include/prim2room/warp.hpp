#pragma once

// Hierarchical warp fields for non-rigid depth registration.
//
// Level k is a small MLP (2 hidden tanh layers, width 64 by default) over a
// sinusoidal positional encoding of frequency 2^k. In NDR mode the output is
// a single ray step delta (smoothly saturated at |delta| <= delta_max) and
// each point moves along its own camera ray, preserving pixel
// correspondence. In NDP mode the output is a 6-DoF axis-angle rotation plus
// translation per point. Parameters start near zero so the initial warp is
// the identity. Gradients are computed analytically (reverse mode).

#include <cstdint>

#include <Eigen/Dense>

#include "prim2room/geometry.hpp"

namespace p2r {

enum class WarpMode { ndr, ndp };

/// y = R(w) x with R the Rodrigues rotation for axis-angle w. When `jac` is
/// non-null it receives d(y)/d(w), series-expanded near w = 0.
Vec3 rodrigues_apply(const Vec3& w, const Vec3& x, Mat3* jac);

class WarpLevel {
 public:
  /// `delta_max` is in the (normalized) units of the input points.
  WarpLevel(WarpMode mode, int level, int hidden_width, double init_sigma, double delta_max,
            uint64_t seed);

  /// Warps row-per-point matrices. `rays` is required in NDR mode (unit
  /// directions, one per point) and ignored in NDP mode. Caches
  /// intermediates for backward().
  Eigen::MatrixXd forward(const Eigen::MatrixXd& points, const Eigen::MatrixXd& rays);

  /// Accumulates parameter gradients given dLoss/dWarped (one row per point).
  /// Must follow a forward() on the same inputs.
  void backward(const Eigen::MatrixXd& d_warped);

  void zero_grad() { grad_.setZero(); }

  Eigen::VectorXd& params() { return theta_; }
  const Eigen::VectorXd& params() const { return theta_; }
  const Eigen::VectorXd& grads() const { return grad_; }
  int param_count() const { return int(theta_.size()); }
  WarpMode mode() const { return mode_; }
  int output_dim() const { return mode_ == WarpMode::ndr ? 1 : 6; }
  double frequency() const { return frequency_; }

 private:
  Eigen::MatrixXd encode(const Eigen::MatrixXd& points) const;

  WarpMode mode_;
  int hidden_;
  double frequency_;  // 2^level
  double delta_max_;
  Eigen::VectorXd theta_;
  Eigen::VectorXd grad_;

  // forward caches
  Eigen::MatrixXd enc_, h1_, h2_, out_, pts_, rays_;

  static constexpr int kInputDim = 6;  // sin/cos per coordinate

  // parameter block offsets
  int off_w1() const { return 0; }
  int off_b1() const { return hidden_ * kInputDim; }
  int off_w2() const { return off_b1() + hidden_; }
  int off_b2() const { return off_w2() + hidden_ * hidden_; }
  int off_w3() const { return off_b2() + hidden_; }
  int off_b3() const { return off_w3() + output_dim() * hidden_; }
  int total_params() const { return off_b3() + output_dim(); }
};

/// Adam step over a flat parameter vector.
class AdamOptimizer {
 public:
  AdamOptimizer(int size, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grads);

 private:
  double lr_, beta1_, beta2_, eps_;
  int t_ = 0;
  Eigen::VectorXd m_, v_;
};

}  // namespace p2r
