// Sampled horizontal paths and their sub-Riemannian length.
#pragma once

#include <utility>
#include <vector>

#include "srqr/geodesics.hpp"
#include "srqr/sphere.hpp"

namespace srqr {

class HorizontalPath {
 public:
  HorizontalPath(std::vector<SpherePoint> samples, std::vector<double> times,
                 double horiz_tol = default_tols().path_horizontal)
      : samples_(std::move(samples)), times_(std::move(times)), tol_(horiz_tol) {
    if (samples_.size() != times_.size() || samples_.size() < 2)
      throw ContractViolation("HorizontalPath: need >= 2 timestamped samples");
    for (std::size_t k = 0; k + 1 < samples_.size(); ++k) {
      if (!(times_[k + 1] > times_[k]))
        throw ContractViolation("HorizontalPath: timestamps must increase");
    }
    segment_residuals_.resize(samples_.size() - 1);
    for (std::size_t k = 0; k + 1 < samples_.size(); ++k) {
      const CVec chord = samples_[k + 1].z() - samples_[k].z();
      const double dt = times_[k + 1] - times_[k];
      const SpherePoint mid((samples_[k].z() + samples_[k + 1].z()));
      const CVec vel = chord / dt;
      const double a = cdot(mid.z(), vel).imag();
      const double n = vel.norm();
      segment_residuals_[k] = (n > 1e-30) ? std::abs(a) / n : 0.0;
    }
  }

  std::size_t size() const { return samples_.size(); }
  const SpherePoint& sample(std::size_t k) const { return samples_[k]; }
  double time(std::size_t k) const { return times_[k]; }
  const std::vector<double>& segment_residuals() const { return segment_residuals_; }
  double horizontality_tolerance() const { return tol_; }

  double max_segment_residual() const {
    double m = 0;
    for (double r : segment_residuals_) m = std::max(m, r);
    return m;
  }

  bool is_horizontal() const { return max_segment_residual() <= tol_; }

 private:
  std::vector<SpherePoint> samples_;
  std::vector<double> times_;
  std::vector<double> segment_residuals_;
  double tol_;
};

/// Trapezoidal integral of speeds; speeds come from difference-quotient
/// velocities measured with sr_inner.  Second-order in the step.
inline double path_length(const HorizontalPath& g) {
  if (!g.is_horizontal())
    throw ContractViolation("path_length: non-horizontal segment, residual " +
                            std::to_string(g.max_segment_residual()));
  const std::size_t n = g.size();
  std::vector<double> speed(n);
  auto speed_at = [&](std::size_t k, std::size_t a, std::size_t b) {
    const CVec chord = (g.sample(b).z() - g.sample(a).z()) / (g.time(b) - g.time(a));
    const SpherePoint& p = g.sample(k);
    // Tangent part only; for horizontal paths the normal defect is O(step^2).
    CVec v = chord - cdot(p.z(), chord).real() * p.z();
    auto h = horizontal_project(p, TangentVector(p, std::move(v)));
    return std::sqrt(std::max(0.0, sr_inner(p, h, h)));
  };
  speed[0] = speed_at(0, 0, 1);
  speed[n - 1] = speed_at(n - 1, n - 2, n - 1);
  for (std::size_t k = 1; k + 1 < n; ++k) speed[k] = speed_at(k, k - 1, k + 1);
  double len = 0;
  for (std::size_t k = 0; k + 1 < n; ++k)
    len += 0.5 * (speed[k] + speed[k + 1]) * (g.time(k + 1) - g.time(k));
  return len;
}

/// Uniform sampling of a closed-form geodesic as a HorizontalPath.
inline HorizontalPath sample_geodesic_path(const SpherePoint& x, const GeodesicParams& params,
                                           double duration, std::size_t samples,
                                           double horiz_tol = default_tols().path_horizontal) {
  std::vector<SpherePoint> pts;
  std::vector<double> ts;
  pts.reserve(samples);
  for (std::size_t k = 0; k < samples; ++k) {
    const double t = duration * double(k) / double(samples - 1);
    pts.push_back(geodesic_point(x, params, t));
    ts.push_back(t);
  }
  return HorizontalPath(std::move(pts), std::move(ts), horiz_tol);
}

}  // namespace srqr
