// Points and tangent structure of the sub-Riemannian sphere S^{2n+1} in C^{n+1}.
//
// Conventions (fixed across the library):
//   contact form   alpha(v) = Im <z, v>  = sum_i r_i^2 dtheta_i(v)
//   Reeb field     T(z) = i z            (alpha(T) = 1)
//   horizontal     H_z  = { v : <z, v>_C = 0 }
// Angles live in (-pi, pi]; a coordinate with r_i = 0 gets theta_i = 0.
#pragma once

#include <Eigen/Dense>

#include "srqr/core.hpp"
#include "srqr/quaternion.hpp"

namespace srqr {

using CVec = Eigen::VectorXcd;

/// Complex Hermitian pairing <u, v> = sum conj(u_i) v_i.  Its real part is the
/// ambient Euclidean inner product of R^{2n+2}.
inline Complex cdot(const CVec& u, const CVec& v) { return u.dot(v); }

class SpherePoint {
 public:
  /// Renormalizes to the unit sphere; rejects near-zero input.
  explicit SpherePoint(CVec z, const Tolerances& tol = default_tols()) : z_(std::move(z)) {
    const double n = z_.norm();
    if (!(n > 1e-8)) throw ContractViolation("SpherePoint: vector too close to zero");
    z_ /= n;
    const int m = static_cast<int>(z_.size());
    r_.resize(m);
    theta_.resize(m);
    for (int i = 0; i < m; ++i) {
      r_[i] = std::abs(z_[i]);
      theta_[i] = (r_[i] < 1e-15) ? 0.0 : std::arg(z_[i]);
    }
    (void)tol;
  }

  static SpherePoint from_polar(const Eigen::VectorXd& r, const Eigen::VectorXd& theta) {
    if (r.size() != theta.size()) throw ContractViolation("from_polar: size mismatch");
    CVec z(r.size());
    for (int i = 0; i < r.size(); ++i) z[i] = std::polar(std::abs(r[i]), theta[i]);
    return SpherePoint(std::move(z));
  }

  const CVec& z() const { return z_; }
  int n() const { return static_cast<int>(z_.size()) - 1; }
  double r(int i) const { return r_[i]; }
  double theta(int i) const { return theta_[i]; }
  const Eigen::VectorXd& radii() const { return r_; }
  const Eigen::VectorXd& angles() const { return theta_; }

  double min_radius() const { return r_.minCoeff(); }
  bool on_branch_locus(double thr = default_tols().branch_locus) const {
    return min_radius() < thr;
  }

  /// Real 8/4-vector view (x1, y1, x2, y2, ...); mirrors the polar invariants.
  Eigen::VectorXd real_coords() const {
    Eigen::VectorXd v(2 * z_.size());
    for (int i = 0; i < z_.size(); ++i) {
      v[2 * i] = z_[i].real();
      v[2 * i + 1] = z_[i].imag();
    }
    return v;
  }

  /// S^3 only: the point as a unit quaternion z1 + z2 j.
  Quat quat() const {
    require_s3();
    return {z_[0], z_[1]};
  }
  static SpherePoint from_quat(const Quat& q) {
    CVec z(2);
    z << q.a, q.b;
    return SpherePoint(std::move(z));
  }

  void require_s3() const {
    if (z_.size() != 2) throw ContractViolation("operation requires n = 1 (S^3)");
  }

  bool close_to(const SpherePoint& o, double tol) const { return (z_ - o.z_).norm() <= tol; }

 private:
  CVec z_;
  Eigen::VectorXd r_, theta_;
};

class TangentVector {
 public:
  TangentVector(SpherePoint base, CVec v, const Tolerances& tol = default_tols())
      : base_(std::move(base)), v_(std::move(v)) {
    if (v_.size() != base_.z().size())
      throw ContractViolation("TangentVector: dimension mismatch");
    const double t = std::abs(cdot(base_.z(), v_).real());
    if (t > tol.tangency * std::max(1.0, v_.norm()))
      throw ContractViolation("TangentVector: not tangent to the sphere");
  }

  const SpherePoint& base() const { return base_; }
  const CVec& v() const { return v_; }
  double norm() const { return v_.norm(); }

  Eigen::VectorXd real_coords() const {
    Eigen::VectorXd w(2 * v_.size());
    for (int i = 0; i < v_.size(); ++i) {
      w[2 * i] = v_[i].real();
      w[2 * i + 1] = v_[i].imag();
    }
    return w;
  }

  static TangentVector from_real(const SpherePoint& p, const Eigen::VectorXd& w) {
    if (w.size() != 2 * p.z().size()) throw ContractViolation("from_real: size mismatch");
    CVec v(p.z().size());
    for (int i = 0; i < v.size(); ++i) v[i] = Complex(w[2 * i], w[2 * i + 1]);
    return TangentVector(p, std::move(v));
  }

 private:
  SpherePoint base_;
  CVec v_;
};

inline void require_same_base(const SpherePoint& a, const SpherePoint& b) {
  if (!a.close_to(b, 1e-9)) throw ContractViolation("vectors based at different points");
}

/// alpha_p(v) = Im <z, v>.
inline double contact_form(const SpherePoint& p, const TangentVector& v) {
  require_same_base(p, v.base());
  return cdot(p.z(), v.v()).imag();
}

/// Reeb field T(z) = i z, normalized so alpha(T) = 1.
inline TangentVector reeb(const SpherePoint& p) {
  return TangentVector(p, Complex(0, 1) * p.z());
}

class HorizontalVector {
 public:
  HorizontalVector(SpherePoint base, CVec v, const Tolerances& tol = default_tols())
      : vec_(std::move(base), std::move(v), tol) {
    residual_ = std::abs(contact_form(vec_.base(), vec_));
    if (residual_ > tol.horizontality * std::max(1e-30, vec_.norm()))
      throw ContractViolation("HorizontalVector: contact-form residual too large");
  }

  const SpherePoint& base() const { return vec_.base(); }
  const CVec& v() const { return vec_.v(); }
  double norm() const { return vec_.norm(); }
  double contact_residual() const { return residual_; }
  const TangentVector& tangent() const { return vec_; }

 private:
  TangentVector vec_;
  double residual_;
};

/// Projection along the Reeb direction: v - alpha(v) T.  Idempotent, kills T.
inline HorizontalVector horizontal_project(const SpherePoint& p, const TangentVector& v) {
  require_same_base(p, v.base());
  const double a = contact_form(p, v);
  CVec h = v.v() - a * (Complex(0, 1) * p.z());
  // Scrub the tiny normal component that roundoff reintroduces.
  h -= cdot(p.z(), h).real() * p.z();
  const double alpha_res = cdot(p.z(), h).imag();
  h -= alpha_res * (Complex(0, 1) * p.z());
  return HorizontalVector(p, std::move(h));
}

/// Sub-Riemannian inner product: ambient Euclidean pairing of representatives.
inline double sr_inner(const SpherePoint& p, const HorizontalVector& u,
                       const HorizontalVector& w) {
  require_same_base(p, u.base());
  require_same_base(p, w.base());
  return cdot(u.v(), w.v()).real();
}

/// Orthonormal horizontal frame on S^3: e1 = j z, e2 = k z = i e1.
inline HorizontalVector frame_e1(const SpherePoint& p) {
  p.require_s3();
  CVec v(2);
  v << -std::conj(p.z()[1]), std::conj(p.z()[0]);
  return HorizontalVector(p, std::move(v));
}

inline HorizontalVector frame_e2(const SpherePoint& p) {
  p.require_s3();
  CVec v(2);
  v << Complex(0, 1) * -std::conj(p.z()[1]), Complex(0, 1) * std::conj(p.z()[0]);
  return HorizontalVector(p, std::move(v));
}

/// cos(phi) e1 + sin(phi) e2 as a raw complex vector.
inline CVec frame_dir(const SpherePoint& p, double phi) {
  p.require_s3();
  const Complex c = std::polar(1.0, phi);
  CVec v(2);
  v << -c * std::conj(p.z()[1]), c * std::conj(p.z()[0]);
  return v;
}

/// Coordinates of a horizontal vector in the (e1, e2) frame.
inline Eigen::Vector2d frame_coords(const SpherePoint& p, const CVec& v) {
  const CVec e1 = frame_e1(p).v();
  const Complex c = cdot(e1, v);  // <e1, v> = u1 + i u2 for horizontal v
  return {c.real(), c.imag()};
}

inline SpherePoint random_sphere_point(Rng& rng, int n = 1) {
  CVec z(n + 1);
  for (int i = 0; i <= n; ++i) z[i] = Complex(rng.normal(), rng.normal());
  return SpherePoint(std::move(z));
}

/// Random unit horizontal vector at p (n = 1).
inline HorizontalVector random_horizontal(Rng& rng, const SpherePoint& p) {
  return HorizontalVector(p, frame_dir(p, rng.uniform(-kPi, kPi)));
}

}  // namespace srqr
