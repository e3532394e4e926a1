// Margulis-Mostow (Pansu) derivatives: dilation limits through privileged
// charts, graded-homomorphism fits, and their distortion.
//
// pi_h = delta_h o Phi_p with Phi_p the chart of heisenberg.hpp; the fit
// evaluates pi_h o f o pi_h^{-1} on a fixed probe set (8 first-layer unit
// points, 4 vertical points) for every h in the schedule and reports the
// Cauchy differences of consecutive fits as the convergence certificate.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "srqr/heisenberg.hpp"
#include "srqr/lens.hpp"
#include "srqr/maps.hpp"

namespace srqr {

struct GradedHom {
  Eigen::Matrix2d horizontal = Eigen::Matrix2d::Identity();  // A
  double vertical = 1.0;                                     // tau
  double fit_residual = 0.0;          // worst probe defect at the finest h
  std::vector<double> h_schedule;
  std::vector<double> cauchy_diffs;   // |fit_h - fit_{h'}| between neighbours
  bool converged = false;
};

/// Privileged coordinates at p: first layer spans the horizontal plane.
inline HeisenbergChart privileged_chart(const SpherePoint& p) { return heisenberg_chart(p); }
inline HeisenbergChart privileged_chart(const LensPoint& p) {
  return heisenberg_chart(p.representative());
}

/// Chart-induced tangent-group product at the base point: the graded chart
/// normalization delta_h(x,y,t) = (hx, hy, h^2 t) induces [X, Y] = -4 dT
/// relative to the model group of heisenberg.hpp, so the law reads
/// (x,y,t)(x',y',t') = (x+x', y+y', t+t' - 2(xy'-yx')).
inline Eigen::Vector3d chart_group_mul(const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
  return {u[0] + v[0], u[1] + v[1], u[2] + v[2] - 2.0 * (u[0] * v[1] - u[1] * v[0])};
}

inline std::vector<double> default_h_schedule() {
  return {1e1, std::pow(10.0, 1.5), 1e2, std::pow(10.0, 2.5), 1e3};
}

namespace detail_pansu {

/// Fixed probe set: 8 first-layer unit points and 4 vertical points.
inline std::vector<Eigen::Vector3d> probe_set() {
  std::vector<Eigen::Vector3d> out;
  for (int k = 0; k < 8; ++k)
    out.push_back({std::cos(kPi * k / 4), std::sin(kPi * k / 4), 0.0});
  out.push_back({0, 0, 1.0});
  out.push_back({0, 0, -1.0});
  out.push_back({0, 0, 0.5});
  out.push_back({0, 0, -0.5});
  return out;
}

struct Fit {
  Eigen::Matrix2d a;
  double tau;
  double residual;
};

inline Fit fit_graded(const std::vector<Eigen::Vector3d>& probes,
                      const std::vector<Eigen::Vector3d>& images) {
  // Least squares for A over the horizontal probes (sum u u^T = 4 I for the
  // fixed probe circle) and for tau over the vertical ones.
  Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
  double tnum = 0, tden = 0;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& u = probes[i];
    const auto& v = images[i];
    if (u[2] == 0.0) {
      acc += v.head<2>() * u.head<2>().transpose();
    } else {
      tnum += v[2] * u[2];
      tden += u[2] * u[2];
    }
  }
  Fit f{acc / 4.0, tnum / tden, 0.0};
  for (std::size_t i = 0; i < probes.size(); ++i) {
    const auto& u = probes[i];
    Eigen::Vector3d hom{f.a(0, 0) * u[0] + f.a(0, 1) * u[1],
                        f.a(1, 0) * u[0] + f.a(1, 1) * u[1], f.tau * u[2]};
    f.residual = std::max(f.residual, (hom - images[i]).norm());
  }
  return f;
}

}  // namespace detail_pansu

/// Graded-homomorphism fit of pi'_h o m o pi_h^{-1} along the h schedule with
/// explicit chart choices (pi_h = delta_h o source_forward on the source,
/// likewise on the target).  The returned hom is the finest-h fit;
/// convergence means Cauchy differences decreasing down to 1e-3 (monotone
/// above the 1e-9 roundoff floor).
inline GradedHom pansu_derivative_with_charts(
    const MapHandle& m, const SpherePoint& p, const HeisenbergChart& source,
    const std::function<Eigen::Vector3d(const SpherePoint&)>& target_forward,
    std::vector<double> h_schedule = default_h_schedule()) {
  if (!m.in_smooth_domain(p)) throw DomainError("pansu_derivative: outside smooth domain");
  const auto probes = detail_pansu::probe_set();

  GradedHom out;
  out.h_schedule = h_schedule;
  std::vector<detail_pansu::Fit> fits;
  for (double h : h_schedule) {
    std::vector<Eigen::Vector3d> images;
    images.reserve(probes.size());
    for (const auto& u : probes) {
      const SpherePoint x = source.inverse(HeisenbergChart::dilate(1.0 / h, u));
      images.push_back(HeisenbergChart::dilate(h, target_forward(m(x))));
    }
    fits.push_back(detail_pansu::fit_graded(probes, images));
  }
  for (std::size_t i = 0; i + 1 < fits.size(); ++i)
    out.cauchy_diffs.push_back((fits[i].a - fits[i + 1].a).norm() +
                               std::abs(fits[i].tau - fits[i + 1].tau));
  out.horizontal = fits.back().a;
  out.vertical = fits.back().tau;
  out.fit_residual = fits.back().residual;
  out.converged = out.cauchy_diffs.back() < 1e-3;
  for (std::size_t i = 0; i + 1 < out.cauchy_diffs.size(); ++i)
    if (out.cauchy_diffs[i + 1] > std::max(out.cauchy_diffs[i] * 1.5, 1e-9))
      out.converged = false;
  return out;
}

/// Fit with the canonical privileged charts at p and m(p).
inline GradedHom pansu_derivative(const MapHandle& m, const SpherePoint& p,
                                  std::vector<double> h_schedule = default_h_schedule()) {
  const HeisenbergChart cp = privileged_chart(p);
  const HeisenbergChart cq = privileged_chart(m(p));
  return pansu_derivative_with_charts(
      m, p, cp, [cq](const SpherePoint& w) { return cq.forward(w); },
      std::move(h_schedule));
}

/// Ratio of the extremal singular values of the fitted horizontal matrix.
inline double hom_distortion(const GradedHom& h) {
  if (!h.converged)
    throw ContractViolation("hom_distortion: fit is not residual-certified at this point");
  Eigen::JacobiSVD<Eigen::Matrix2d> svd(h.horizontal);
  const double lo = svd.singularValues()[1];
  if (lo <= 1e-14) throw NumericalError("hom_distortion: singular horizontal matrix");
  return svd.singularValues()[0] / lo;
}

/// Fixture: a map of the sphere obtained by conjugating a chart-coordinate
/// map through the privileged chart at `base`.
inline MapHandle chart_conjugate_map(const HeisenbergChart& chart,
                                     std::function<Eigen::Vector3d(const Eigen::Vector3d&)> fn,
                                     const std::string& name) {
  struct Impl final : MapImpl {
    HeisenbergChart chart;
    std::function<Eigen::Vector3d(const Eigen::Vector3d&)> fn;
    std::string name;
    Impl(HeisenbergChart c, std::function<Eigen::Vector3d(const Eigen::Vector3d&)> f,
         std::string n)
        : chart(std::move(c)), fn(std::move(f)), name(std::move(n)) {}
    SpherePoint eval(const SpherePoint& p) const override {
      return chart.inverse(fn(chart.forward(p)));
    }
    std::string kind() const override { return name; }
    nlohmann::json descriptor() const override { return {{"kind", name}}; }
  };
  return MapHandle(std::make_shared<Impl>(chart, std::move(fn), name));
}

inline MapHandle chart_dilation_map(const HeisenbergChart& chart, double r) {
  return chart_conjugate_map(
      chart, [r](const Eigen::Vector3d& v) { return HeisenbergChart::dilate(r, v); },
      "chart-dilation");
}

inline MapHandle chart_translation_map(const HeisenbergChart& chart, const Eigen::Vector3d& g) {
  return chart_conjugate_map(
      chart, [g](const Eigen::Vector3d& v) { return chart_group_mul(g, v); },
      "chart-translation");
}

}  // namespace srqr
