// Normal sub-Riemannian geodesics of S^3 in closed form.
//
// With the frame T = iz, e1 = jz, e2 = kz, unit-speed geodesics from x are
//     gamma(t) = exp(-t l i) exp(t (a_phi + l i)) x,
// a_phi = cos(phi) j + sin(phi) k, l the vertical parameter.  One checks
// gamma' gamma^{-1} = a_{phi - 2 t l}, so the curve is horizontal with unit
// speed for every l.  Contact S^3 has no nontrivial abnormal geodesics, so
// minimizers belong to this family; the connection solver below recovers
// (t, phi, l) for a given endpoint pair and is cross-checked against the
// transcription optimizer in the tests.
#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "srqr/sphere.hpp"

namespace srqr {

struct GeodesicParams {
  double phi = 0.0;     // initial horizontal frame angle
  double lambda = 0.0;  // vertical parameter (0 = horizontal great circle)
};

/// Group factor w(t) with gamma(t) = w(t) x.
inline Quat geodesic_factor(double t, const GeodesicParams& g) {
  const Quat u{Complex(0, g.lambda), std::polar(1.0, g.phi)};  // a_phi + l i
  return quat_exp_imag(-t * g.lambda * Quat::i()) * quat_exp_imag(t * u);
}

inline SpherePoint geodesic_point(const SpherePoint& x, const GeodesicParams& g, double t) {
  x.require_s3();
  return SpherePoint::from_quat(geodesic_factor(t, g) * x.quat());
}

/// Unit velocity a_{phi - 2 t l} gamma(t).
inline HorizontalVector geodesic_velocity(const SpherePoint& x, const GeodesicParams& g,
                                          double t) {
  const Quat gam = geodesic_factor(t, g) * x.quat();
  const Quat v = horizontal_dir(g.phi - 2.0 * t * g.lambda) * gam;
  CVec cv(2);
  cv << v.a, v.b;
  return HorizontalVector(SpherePoint::from_quat(gam), std::move(cv));
}

struct Connection {
  double t = 0.0;  // geodesic length
  GeodesicParams params;
  int newton_runs = 0;
};

namespace detail {

// Components of w = exp(-m i) exp(s (a + (m/s) i) / mu-scaling) in the reduced
// variables m = t*lambda, s = t*mu (mu = sqrt(1+lambda^2), |m| < s):
//   Re w      = cos m cos s + (m/s) sin m sin s
//   (i) w     = (m/s) cos m sin s - sin m cos s
//   |(j,k) w| = t sin(s)/s,   arg = phi - m
inline void w_real_i(double m, double s, double& w0, double& wi) {
  const double cm = std::cos(m), sm = std::sin(m);
  const double cs = std::cos(s), ss = std::sin(s);
  const double q = m / s;
  w0 = cm * cs + q * sm * ss;
  wi = q * cm * ss - sm * cs;
}

}  // namespace detail

/// Solve gamma(t) = y for minimal t.  Returns nullopt when no Newton branch
/// converges (callers fall back to the transcription optimizer).
inline std::optional<Connection> connect_geodesic(const SpherePoint& x, const SpherePoint& y) {
  x.require_s3();
  y.require_s3();
  const Quat w = y.quat() * x.quat().inv();
  const double w0 = w.re(), wi = w.a.imag();
  const double wb = std::abs(w.b);

  if ((w - Quat::one()).norm() < 1e-13) return Connection{0.0, {0.0, 0.0}, 0};

  // Vertical displacement y = e^{i psi} x: minimizer has s = pi exactly.
  if (wb < 1e-13) {
    double psi = std::atan2(wi, w0);
    if (psi < 0) psi += kTwoPi;
    const double m = kPi - psi;
    const double t = std::sqrt(std::max(0.0, kPi * kPi - m * m));
    Connection c;
    c.t = t;
    c.params.lambda = (t > 1e-14) ? m / t : 0.0;
    c.params.phi = 0.0;
    return c;
  }

  const double rho = std::acos(std::clamp(w0, -1.0, 1.0));
  std::vector<double> s_seeds;
  for (double f : {1.0, 1.3, 1.8, 2.5}) {
    const double s = f * std::max(rho, 1e-3);
    if (s < kPi + 0.05) s_seeds.push_back(s);
  }
  s_seeds.push_back(0.5 * (rho + kPi));
  s_seeds.push_back(0.999 * kPi);

  std::optional<Connection> best;
  int runs = 0;
  for (double s0 : s_seeds) {
    for (double f : {0.0, 0.35, -0.35, 0.75, -0.75, 0.95, -0.95}) {
      double m = f * s0, s = s0;
      ++runs;
      bool ok = false;
      for (int it = 0; it < 60; ++it) {
        double f1, f2;
        detail::w_real_i(m, s, f1, f2);
        f1 -= w0;
        f2 -= wi;
        const double res = std::hypot(f1, f2);
        if (res < 1e-13) {
          ok = true;
          break;
        }
        const double h = 1e-7;
        double a1, a2, b1, b2;
        detail::w_real_i(m + h, s, a1, a2);
        detail::w_real_i(m - h, s, b1, b2);
        const double J11 = (a1 - b1) / (2 * h), J21 = (a2 - b2) / (2 * h);
        detail::w_real_i(m, s + h, a1, a2);
        detail::w_real_i(m, s - h, b1, b2);
        const double J12 = (a1 - b1) / (2 * h), J22 = (a2 - b2) / (2 * h);
        const double det = J11 * J22 - J12 * J21;
        if (std::abs(det) < 1e-16) break;
        double dm = -(J22 * f1 - J12 * f2) / det;
        double ds = -(-J21 * f1 + J11 * f2) / det;
        // Damp steps that leave the admissible wedge 0 < |m| < s <= pi.
        double step = 1.0;
        for (int k = 0; k < 30; ++k) {
          const double mn = m + step * dm, sn = s + step * ds;
          if (sn > 1e-10 && sn < kPi + 1e-9 && std::abs(mn) < sn) break;
          step *= 0.5;
        }
        m += step * dm;
        s += step * ds;
      }
      if (!ok) continue;
      const double t = std::sqrt(std::max(0.0, s * s - m * m));
      if (t < 1e-12) continue;
      if (!best || t < best->t - 1e-14) {
        Connection c;
        c.t = t;
        c.params.lambda = m / t;
        c.params.phi = std::arg(w.b) + m;
        c.newton_runs = runs;
        best = c;
      }
    }
  }
  if (best) best->newton_runs = runs;
  return best;
}

/// Fast S^3 distance via the geodesic family; throws NumericalError when the
/// solver finds no branch (rare; callers needing robustness catch and fall
/// back to the transcription solver).
inline double sphere_distance_fast(const SpherePoint& x, const SpherePoint& y) {
  auto c = connect_geodesic(x, y);
  if (!c) throw NumericalError("connect_geodesic: no convergent branch");
  return c->t;
}

/// Riemannian lower bound for the cc distance (great-circle distance).
inline double riemannian_lower_bound(const SpherePoint& x, const SpherePoint& y) {
  return std::acos(std::clamp(cdot(x.z(), y.z()).real(), -1.0, 1.0));
}

}  // namespace srqr
