// Unit quaternions give S^3 its group structure: a point (z1, z2) in C^2 is
// the quaternion z1 + z2 j.  The standard contact frame is left translation,
//   T(z) = i z,   e1(z) = j z,   e2(z) = k z,
// so geodesics and frames reduce to quaternion algebra.
#pragma once

#include <cmath>

#include "srqr/core.hpp"

namespace srqr {

struct Quat {
  Complex a{0.0, 0.0};  // 1 and i components
  Complex b{0.0, 0.0};  // j and k components (q = a + b j)

  static Quat one() { return {Complex(1, 0), Complex(0, 0)}; }
  static Quat i() { return {Complex(0, 1), Complex(0, 0)}; }
  static Quat j() { return {Complex(0, 0), Complex(1, 0)}; }
  static Quat k() { return {Complex(0, 0), Complex(0, 1)}; }

  double re() const { return a.real(); }
  double norm2() const { return std::norm(a) + std::norm(b); }
  double norm() const { return std::sqrt(norm2()); }

  Quat conj() const { return {std::conj(a), -b}; }
  Quat inv() const {
    const double n2 = norm2();
    return {std::conj(a) / n2, -b / n2};
  }

  friend Quat operator*(const Quat& p, const Quat& q) {
    // Cayley-Dickson: (a1 + a2 j)(b1 + b2 j) = (a1 b1 - a2 conj(b2)) + (a1 b2 + a2 conj(b1)) j
    return {p.a * q.a - p.b * std::conj(q.b), p.a * q.b + p.b * std::conj(q.a)};
  }
  friend Quat operator+(const Quat& p, const Quat& q) { return {p.a + q.a, p.b + q.b}; }
  friend Quat operator-(const Quat& p, const Quat& q) { return {p.a - q.a, p.b - q.b}; }
  friend Quat operator*(double s, const Quat& q) { return {s * q.a, s * q.b}; }
};

/// exp of a purely imaginary quaternion (Re a = 0).
inline Quat quat_exp_imag(const Quat& u) {
  const double th = u.norm();
  if (th < 1e-300) return Quat::one();
  const double s = std::sin(th) / th;
  Quat r{Complex(std::cos(th), s * u.a.imag()), s * u.b};
  return r;
}

/// Unit horizontal direction at the identity: cos(phi) j + sin(phi) k.
inline Quat horizontal_dir(double phi) {
  return {Complex(0, 0), Complex(std::cos(phi), std::sin(phi))};
}

}  // namespace srqr
