#include "prim2room/warp.hpp"

#include <cmath>

#include "prim2room/errors.hpp"
#include "prim2room/rng.hpp"

namespace p2r {

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return m;
}

}  // namespace

Vec3 rodrigues_apply(const Vec3& w, const Vec3& x, Mat3* jac) {
  const double theta_sq = w.squaredNorm();
  const double theta = std::sqrt(theta_sq);
  double a, b, c1, c2;  // sin/theta, (1-cos)/theta^2, a'/theta, b'/theta
  if (theta < 1e-4) {
    a = 1.0 - theta_sq / 6.0 + theta_sq * theta_sq / 120.0;
    b = 0.5 - theta_sq / 24.0 + theta_sq * theta_sq / 720.0;
    c1 = -1.0 / 3.0 + theta_sq / 30.0;
    c2 = -1.0 / 12.0 + theta_sq / 180.0;
  } else {
    const double s = std::sin(theta), c = std::cos(theta);
    a = s / theta;
    b = (1.0 - c) / theta_sq;
    c1 = (theta * c - s) / (theta_sq * theta);
    c2 = (theta * s - 2.0 * (1.0 - c)) / (theta_sq * theta_sq);
  }
  const Vec3 g = w.cross(x);
  const Vec3 gg = w.cross(g);
  const Vec3 y = x + a * g + b * gg;
  if (jac) {
    *jac = -a * skew(x) - b * (skew(g) + skew(w) * skew(x)) + g * (c1 * w).transpose() +
           gg * (c2 * w).transpose();
  }
  return y;
}

WarpLevel::WarpLevel(WarpMode mode, int level, int hidden_width, double init_sigma,
                     double delta_max, uint64_t seed)
    : mode_(mode), hidden_(hidden_width), frequency_(std::pow(2.0, level)),
      delta_max_(delta_max) {
  if (hidden_width <= 0) throw ConfigurationError("warp level: hidden width must be positive");
  if (!(delta_max > 0.0)) throw ConfigurationError("warp level: delta_max must be positive");
  theta_.resize(total_params());
  grad_ = Eigen::VectorXd::Zero(theta_.size());
  std::mt19937_64 rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, init_sigma);
  for (int i = 0; i < theta_.size(); ++i) theta_[i] = gauss(rng);
}

Eigen::MatrixXd WarpLevel::encode(const Eigen::MatrixXd& points) const {
  const double f = frequency_ * M_PI;
  Eigen::MatrixXd enc(points.rows(), kInputDim);
  for (int c = 0; c < 3; ++c) {
    enc.col(2 * c) = (f * points.col(c)).array().sin();
    enc.col(2 * c + 1) = (f * points.col(c)).array().cos();
  }
  return enc;
}

Eigen::MatrixXd WarpLevel::forward(const Eigen::MatrixXd& points, const Eigen::MatrixXd& rays) {
  const int n = int(points.rows());
  const int out_dim = output_dim();
  pts_ = points;
  rays_ = rays;
  enc_ = encode(points);

  using Eigen::Map;
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const Map<const MatrixXd> w1(theta_.data() + off_w1(), hidden_, kInputDim);
  const Map<const VectorXd> b1(theta_.data() + off_b1(), hidden_);
  const Map<const MatrixXd> w2(theta_.data() + off_w2(), hidden_, hidden_);
  const Map<const VectorXd> b2(theta_.data() + off_b2(), hidden_);
  const Map<const MatrixXd> w3(theta_.data() + off_w3(), out_dim, hidden_);
  const Map<const VectorXd> b3(theta_.data() + off_b3(), out_dim);

  h1_ = ((enc_ * w1.transpose()).rowwise() + b1.transpose()).array().tanh();
  h2_ = ((h1_ * w2.transpose()).rowwise() + b2.transpose()).array().tanh();
  out_ = (h2_ * w3.transpose()).rowwise() + b3.transpose();

  Eigen::MatrixXd warped(n, 3);
  if (mode_ == WarpMode::ndr) {
    if (rays.rows() != n) throw ConfigurationError("warp level: NDR mode requires per-point rays");
    // delta = delta_max * tanh(raw / delta_max): identity slope at zero,
    // smooth saturation at the step bound.
    for (int i = 0; i < n; ++i) {
      const double delta = delta_max_ * std::tanh(out_(i, 0) / delta_max_);
      warped.row(i) = points.row(i) + delta * rays.row(i);
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const Vec3 w = out_.row(i).head<3>();
      const Vec3 t = out_.row(i).tail<3>();
      warped.row(i) = (rodrigues_apply(w, points.row(i).transpose(), nullptr) + t).transpose();
    }
  }
  return warped;
}

void WarpLevel::backward(const Eigen::MatrixXd& d_warped) {
  const int n = int(pts_.rows());
  const int out_dim = output_dim();
  if (d_warped.rows() != n) throw ConfigurationError("warp level: backward/forward size mismatch");

  Eigen::MatrixXd d_out(n, out_dim);
  if (mode_ == WarpMode::ndr) {
    for (int i = 0; i < n; ++i) {
      const double d_delta = d_warped.row(i).dot(rays_.row(i));
      const double th = std::tanh(out_(i, 0) / delta_max_);
      d_out(i, 0) = d_delta * (1.0 - th * th);
    }
  } else {
    for (int i = 0; i < n; ++i) {
      const Vec3 w = out_.row(i).head<3>();
      Mat3 jac;
      rodrigues_apply(w, pts_.row(i).transpose(), &jac);
      const Vec3 dy = d_warped.row(i).transpose();
      d_out.row(i).head<3>() = (jac.transpose() * dy).transpose();
      d_out.row(i).tail<3>() = dy.transpose();
    }
  }

  using Eigen::Map;
  using Eigen::MatrixXd;
  using Eigen::VectorXd;
  const Map<const MatrixXd> w2(theta_.data() + off_w2(), hidden_, hidden_);
  const Map<const MatrixXd> w3(theta_.data() + off_w3(), out_dim, hidden_);
  Map<MatrixXd> g_w1(grad_.data() + off_w1(), hidden_, kInputDim);
  Map<VectorXd> g_b1(grad_.data() + off_b1(), hidden_);
  Map<MatrixXd> g_w2(grad_.data() + off_w2(), hidden_, hidden_);
  Map<VectorXd> g_b2(grad_.data() + off_b2(), hidden_);
  Map<MatrixXd> g_w3(grad_.data() + off_w3(), out_dim, hidden_);
  Map<VectorXd> g_b3(grad_.data() + off_b3(), out_dim);

  g_w3 += d_out.transpose() * h2_;
  g_b3 += d_out.colwise().sum().transpose();
  const MatrixXd d_z2 = (d_out * w3).array() * (1.0 - h2_.array().square());
  g_w2 += d_z2.transpose() * h1_;
  g_b2 += d_z2.colwise().sum().transpose();
  const MatrixXd d_z1 = (d_z2 * w2).array() * (1.0 - h1_.array().square());
  g_w1 += d_z1.transpose() * enc_;
  g_b1 += d_z1.colwise().sum().transpose();
}

AdamOptimizer::AdamOptimizer(int size, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  m_ = Eigen::VectorXd::Zero(size);
  v_ = Eigen::VectorXd::Zero(size);
}

void AdamOptimizer::step(Eigen::VectorXd& params, const Eigen::VectorXd& grads) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grads;
  v_ = beta2_ * v_.array() + (1.0 - beta2_) * grads.array().square();
  const double bc1 = 1.0 - std::pow(beta1_, t_);
  const double bc2 = 1.0 - std::pow(beta2_, t_);
  params.array() -= lr_ * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + eps_);
}

}  // namespace p2r
