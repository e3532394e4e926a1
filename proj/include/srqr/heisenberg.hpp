// First Heisenberg group model and privileged-coordinate charts on S^3.
//
// Model conventions: points (x, y, t) with product
//     (x,y,t)(x',y',t') = (x+x', y+y', t+t' + (x y' - y x')/2),
// horizontal frame X = dx - (y/2) dt, Y = dy + (x/2) dt (orthonormal), Reeb
// dt, graded dilation delta_h(x,y,t) = (hx, hy, h^2 t).
//
// The chart at a base point b carries b to the pole (1,0) by the unitary
// z -> z b^{-1} (a frame-preserving isometry), then applies the Cayley-type
// stereographic identification of S^3 minus the antipode with the group,
// scaled so the frame (e1, e2) at b maps exactly to (dx, dy) at the origin.
// In these coordinates the Reeb vector at b maps to (0, 0, 2) and the induced
// tangent-group bracket is [dx, dy] = -4 dt relative to the model's +1; the
// discrepancy is a pure normalization and cancels in every graded-homomorphism
// quantity (tau = det A holds in any convention).
#pragma once

#include <Eigen/Dense>

#include "srqr/sphere.hpp"

namespace srqr {

struct HeisenbergPoint {
  double x = 0, y = 0, t = 0;

  Eigen::Vector3d vec() const { return {x, y, t}; }
  static HeisenbergPoint from_vec(const Eigen::Vector3d& v) { return {v[0], v[1], v[2]}; }
};

inline HeisenbergPoint heis_mul(const HeisenbergPoint& p, const HeisenbergPoint& q) {
  return {p.x + q.x, p.y + q.y, p.t + q.t + 0.5 * (p.x * q.y - p.y * q.x)};
}

inline HeisenbergPoint heis_inv(const HeisenbergPoint& p) { return {-p.x, -p.y, -p.t}; }

inline HeisenbergPoint heis_dilate(double h, const HeisenbergPoint& p) {
  return {h * p.x, h * p.y, h * h * p.t};
}

/// Homogeneous gauge ((x^2+y^2)^2 + t^2)^{1/4}; comparable to the cc distance
/// and smooth away from the origin.
inline double heis_gauge(const HeisenbergPoint& p) {
  const double q = p.x * p.x + p.y * p.y;
  return std::pow(q * q + p.t * p.t, 0.25);
}

/// Horizontal frame at p (columns X, Y as ambient R^3 vectors).
inline Eigen::Matrix<double, 3, 2> heis_frame(const HeisenbergPoint& p) {
  Eigen::Matrix<double, 3, 2> f;
  f << 1, 0, 0, 1, -0.5 * p.y, 0.5 * p.x;
  return f;
}

class HeisenbergChart {
 public:
  explicit HeisenbergChart(SpherePoint base) : base_(std::move(base)) {
    base_.require_s3();
    to_pole_ = base_.quat().inv();    // right factor: z -> z * base^{-1}
    from_pole_ = base_.quat();
  }

  const SpherePoint& base() const { return base_; }

  Eigen::Vector3d forward(const SpherePoint& p) const {
    p.require_s3();
    const Quat w = p.quat() * to_pole_;
    const Complex w1 = w.a, w2 = w.b;
    const Complex d = Complex(1, 0) + w1;
    if (std::abs(d) < 1e-9)
      throw DomainError("HeisenbergChart: evaluation at the antipode of the base");
    const Complex zeta = w2 / d;
    const double tc = 2.0 * w1.imag() / std::norm(d);
    return {2.0 * zeta.real(), 2.0 * zeta.imag(), 4.0 * tc};
  }

  SpherePoint inverse(const Eigen::Vector3d& v) const {
    const Complex zeta(0.5 * v[0], 0.5 * v[1]);
    const double tc = 0.25 * v[2];
    const Complex u(tc, std::norm(zeta));
    const Complex den = Complex(0, 1) + u;
    const Complex w1 = (Complex(0, 1) - u) / den;
    const Complex w2 = 2.0 * Complex(0, 1) * zeta / den;
    return SpherePoint::from_quat(Quat{w1, w2} * from_pole_);
  }

  static Eigen::Vector3d dilate(double h, const Eigen::Vector3d& v) {
    return {h * v[0], h * v[1], h * h * v[2]};
  }

  /// Gauge of the chart image; the cc-distance surrogate used by bump profiles.
  double gauge_from_base(const SpherePoint& p) const {
    return heis_gauge(HeisenbergPoint::from_vec(forward(p)));
  }

 private:
  SpherePoint base_;
  Quat to_pole_, from_pole_;
};

inline HeisenbergChart heisenberg_chart(const SpherePoint& base) {
  return HeisenbergChart(base);
}

}  // namespace srqr
