// Numerical distortion measurement: metric H(x,f) by metric-sphere sampling,
// extremal horizontal singular values, BLD length ratios, iterate tables.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "srqr/geodesics.hpp"
#include "srqr/maps.hpp"
#include "srqr/path.hpp"

namespace srqr {

/// Horizontal differential of a sphere map in the orthonormal frames at x and
/// m(x): the 2x2 matrix sending frame coordinates to frame coordinates.
inline Eigen::Matrix2d horizontal_matrix(const MapHandle& m, const SpherePoint& x) {
  if (!m.in_smooth_domain(x)) throw DomainError("horizontal_matrix: outside smooth domain");
  const SpherePoint y = m(x);
  Eigen::Matrix2d d;
  for (int col = 0; col < 2; ++col) {
    const HorizontalVector e(x, frame_dir(x, col == 0 ? 0.0 : kPi / 2));
    const HorizontalVector w = pushforward(m, x, e);
    d.col(col) = frame_coords(y, w.v());
  }
  return d;
}

inline std::pair<double, double> singular_values(const Eigen::Matrix2d& d) {
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(d);
  return {svd.singularValues()[1], svd.singularValues()[0]};  // (min, max)
}

/// Extremal singular values (lambda_minus, lambda_plus) of the horizontal
/// pushforward at x.
inline std::pair<double, double> eigen_distortion(const MapHandle& m, const SpherePoint& x) {
  return singular_values(horizontal_matrix(m, x));
}

struct DistortionRadiusRow {
  double radius = 0;
  double sup = 0;
  double inf = 0;
  double ratio = 1;
  int failed_samples = 0;
};

struct DistortionReport {
  std::vector<DistortionRadiusRow> rows;
  double extrapolated = 1.0;      // H(x,f) from the linear fit on the finest radii
  bool monotone = true;           // ratios non-increasing toward r -> 0
  std::pair<double, double> eigen{1.0, 1.0};
  std::string method = "metric-sphere";
};

/// Distance helper used by the samplers: closed-form geodesic connection with
/// a transcription fallback.
inline double robust_distance(const SpherePoint& a, const SpherePoint& b) {
  if (auto c = connect_geodesic(a, b)) return c->t;
  CcOptions o;
  o.restarts = 4;
  return cc_distance(a, b, o).value;
}

/// Metric distortion H(x, f): for each radius, >= `samples` points on the
/// cc-sphere S(x, r) (shot along horizontal frame directions, root-corrected
/// against the distance solver), sup/inf of image distances, then a linear
/// extrapolation H(r) = H0 + c r over the three smallest radii.
inline DistortionReport metric_distortion(const MapHandle& m, const SpherePoint& x,
                                          std::vector<double> radii, int samples = 64,
                                          bool root_correct = false) {
  if (radii.empty()) throw ContractViolation("metric_distortion: need at least one radius");
  for (std::size_t i = 0; i + 1 < radii.size(); ++i)
    if (!(radii[i] > radii[i + 1]))
      throw ContractViolation("metric_distortion: radii must decrease");
  if (radii.back() < 1e-4)
    throw ContractViolation("metric_distortion: radii below 1e-4 are optimizer noise");

  DistortionReport rep;
  const SpherePoint fx = m(x);
  rep.eigen = eigen_distortion(m, x);
  for (double r : radii) {
    DistortionRadiusRow row;
    row.radius = r;
    row.sup = 0;
    row.inf = std::numeric_limits<double>::infinity();
    for (int k = 0; k < samples; ++k) {
      const double phi = kTwoPi * k / samples;
      double t = r;
      SpherePoint y = geodesic_point(x, {phi, 0.0}, t);
      if (root_correct) {
        // 1-D secant correction of the parameter so the solver-certified
        // distance equals r.
        for (int it = 0; it < 4; ++it) {
          const double d = robust_distance(x, y);
          if (std::abs(d - r) < 1e-10) break;
          t *= r / d;
          y = geodesic_point(x, {phi, 0.0}, t);
        }
      }
      double dist;
      try {
        dist = robust_distance(fx, m(y));
      } catch (const NumericalError&) {
        ++row.failed_samples;
        continue;
      }
      row.sup = std::max(row.sup, dist);
      row.inf = std::min(row.inf, dist);
    }
    row.ratio = row.sup / row.inf;
    rep.rows.push_back(row);
  }

  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i)
    if (rep.rows[i + 1].ratio > rep.rows[i].ratio + 1e-9) rep.monotone = false;

  // Least-squares line through (r, ratio) on the three smallest radii.
  const std::size_t n = rep.rows.size();
  const std::size_t k0 = n > 3 ? n - 3 : 0;
  double sr = 0, sh = 0, srr = 0, srh = 0;
  int cnt = 0;
  for (std::size_t i = k0; i < n; ++i) {
    sr += rep.rows[i].radius;
    sh += rep.rows[i].ratio;
    srr += rep.rows[i].radius * rep.rows[i].radius;
    srh += rep.rows[i].radius * rep.rows[i].ratio;
    ++cnt;
  }
  if (cnt >= 2 && srr * cnt - sr * sr > 1e-18) {
    const double slope = (cnt * srh - sr * sh) / (cnt * srr - sr * sr);
    rep.extrapolated = (sh - slope * sr) / cnt;
  } else {
    rep.extrapolated = rep.rows.back().ratio;
  }
  return rep;
}

/// BLD length ratio of m along a horizontal path: (len(m o g)/len(g), its
/// reciprocal).  The image path must itself be horizontal.
inline std::pair<double, double> bld_ratio(const MapHandle& m, const HorizontalPath& g,
                                           double image_horiz_tol = 1e-4) {
  const double len = path_length(g);
  std::vector<SpherePoint> img;
  std::vector<double> ts;
  img.reserve(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) {
    img.push_back(m(g.sample(k)));
    ts.push_back(g.time(k));
  }
  HorizontalPath image(std::move(img), std::move(ts), image_horiz_tol);
  if (!image.is_horizontal())
    throw NumericalError("bld_ratio: image path not horizontal, residual " +
                         std::to_string(image.max_segment_residual()));
  const double ratio = path_length(image) / len;
  return {ratio, 1.0 / ratio};
}

/// One row per iterate count: the worst ratio lambda_plus/lambda_minus of the
/// chain-ruled horizontal differential over the sample.
struct IterateRow {
  int n = 0;
  double max_ratio = 1.0;
  int excluded = 0;
};

/// Generic iterate-distortion table.  `step` advances a state and returns the
/// 2x2 horizontal matrix of that step expressed between the frames at the
/// current and next state; it throws DomainError when the orbit hits a branch
/// locus (the point is excluded from later rows and counted).
template <class State>
std::vector<IterateRow> iterate_distortion_rows(
    const std::function<std::pair<State, Eigen::Matrix2d>(const State&)>& step,
    std::vector<State> sample, int n_max) {
  std::vector<IterateRow> rows(n_max);
  std::vector<Eigen::Matrix2d> acc(sample.size(), Eigen::Matrix2d::Identity());
  std::vector<bool> alive(sample.size(), true);
  std::vector<State> cur = std::move(sample);
  for (int n = 1; n <= n_max; ++n) {
    IterateRow row;
    row.n = n;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (!alive[i]) {
        ++row.excluded;
        continue;
      }
      try {
        auto [next, d] = step(cur[i]);
        acc[i] = d * acc[i];
        cur[i] = next;
      } catch (const DomainError&) {
        alive[i] = false;
        ++row.excluded;
        continue;
      }
      // Rescale: only the singular-value ratio matters, and long conformal
      // contractions would otherwise underflow the product.
      const double nrm = acc[i].norm();
      if (nrm > 0 && std::isfinite(nrm)) acc[i] /= nrm;
      auto [lo, hi] = singular_values(acc[i]);
      if (lo <= 0) {
        alive[i] = false;
        ++row.excluded;
        continue;
      }
      row.max_ratio = std::max(row.max_ratio, hi / lo);
    }
    rows[n - 1] = row;
  }
  return rows;
}

/// Iterate distortion of a sphere self-map.
inline std::vector<IterateRow> iterate_distortion(const MapHandle& m,
                                                  std::vector<SpherePoint> sample, int n_max) {
  std::function<std::pair<SpherePoint, Eigen::Matrix2d>(const SpherePoint&)> step =
      [&m](const SpherePoint& x) {
        const Eigen::Matrix2d d = horizontal_matrix(m, x);
        return std::make_pair(m(x), d);
      };
  return iterate_distortion_rows<SpherePoint>(step, std::move(sample), n_max);
}

}  // namespace srqr
