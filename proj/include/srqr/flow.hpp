// Contact flows on S^3: potentials, their Libermann fields, adaptive flow
// integration, bump-modified potentials, and the trap interpolant that welds
// the multi-twist map to a rotation across an annulus.
//
// With alpha(v) = Im<z,v> and Reeb T = iz, the contact field of a potential
// rho is
//     W = rho (i z) + (i/2) grad_H rho,
// which is the S^3 formula W = i (conj(Z) rho) Z - i (Z rho) conj(Z) + rho T
// for Z = conj(z2) d/dz1 - conj(z1) d/dz2 written against this normalization
// (alpha(W) = rho holds exactly).
#pragma once

#include <algorithm>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "srqr/distortion.hpp"
#include "srqr/heisenberg.hpp"
#include "srqr/maps.hpp"

namespace srqr {

class PotentialImpl {
 public:
  virtual ~PotentialImpl() = default;
  virtual double eval(const SpherePoint& p) const = 0;
  virtual bool in_domain(const SpherePoint& p) const = 0;
  /// False when the domain excludes part of the sphere (the flow integrator
  /// then watches for angle wrap-around across the excluded set).
  virtual bool domain_is_global() const { return true; }
  /// Ambient gradient (complex representative, G_x + i G_y per slot) of the
  /// 0-homogeneous extension.  Default: 4th-order central differences.
  virtual CVec gradient(const SpherePoint& p) const {
    const int dim = int(p.z().size());
    CVec g(dim);
    const double h = 1e-5;
    auto f = [this](CVec z) { return eval(SpherePoint(std::move(z))); };
    for (int i = 0; i < dim; ++i) {
      for (int part = 0; part < 2; ++part) {
        const Complex dir = part == 0 ? Complex(1, 0) : Complex(0, 1);
        auto at = [&](double s) {
          CVec z = p.z();
          z[i] += s * dir;
          return f(std::move(z));
        };
        const double d =
            (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
        if (part == 0)
          g[i] = Complex(d, g[i].imag());
        else
          g[i] = Complex(g[i].real(), d);
      }
    }
    return g;
  }
};

class Potential {
 public:
  explicit Potential(std::shared_ptr<const PotentialImpl> impl) : impl_(std::move(impl)) {}
  double operator()(const SpherePoint& p) const { return impl_->eval(p); }
  bool in_domain(const SpherePoint& p) const { return impl_->in_domain(p); }
  bool domain_is_global() const { return impl_->domain_is_global(); }
  CVec gradient(const SpherePoint& p) const { return impl_->gradient(p); }
  const PotentialImpl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const PotentialImpl> impl_;
};

namespace potentials {

class Constant final : public PotentialImpl {
 public:
  explicit Constant(double c) : c_(c) {}
  double eval(const SpherePoint&) const override { return c_; }
  bool in_domain(const SpherePoint&) const override { return true; }
  CVec gradient(const SpherePoint& p) const override { return CVec::Zero(p.z().size()); }

 private:
  double c_;
};

/// rho(z) = ln(a) sum r_i^2 theta_i on { |theta_i| < pi, r_i != 0 }.  Its
/// field is ln(a) sum theta_i d/dtheta_i, whose time-s flow multiplies every
/// angle by a^s; the time-1 flow is the multi-twist F_a.
class Twist final : public PotentialImpl {
 public:
  explicit Twist(int a) : a_(a), ln_a_(std::log(double(a))) {
    if (a < 2) throw ContractViolation("twist potential: a must be >= 2");
  }
  int a() const { return a_; }

  bool in_domain(const SpherePoint& p) const override {
    for (int i = 0; i < p.z().size(); ++i)
      if (p.r(i) < default_tols().branch_locus ||
          std::abs(p.theta(i)) > kPi * (1.0 - 1e-3))
        return false;
    return true;
  }
  bool domain_is_global() const override { return false; }
  double eval(const SpherePoint& p) const override {
    require(p);
    double s = 0;
    for (int i = 0; i < p.z().size(); ++i) s += p.r(i) * p.r(i) * p.theta(i);
    return ln_a_ * s;
  }
  CVec gradient(const SpherePoint& p) const override {
    require(p);
    CVec g(p.z().size());
    for (int i = 0; i < p.z().size(); ++i)
      g[i] = ln_a_ * (2.0 * p.theta(i) * p.z()[i] + Complex(0, 1) * p.z()[i]);
    return g;
  }

 private:
  void require(const SpherePoint& p) const {
    if (!in_domain(p))
      throw DomainError("twist potential: evaluation at theta = +-pi or the branch locus");
  }
  int a_;
  double ln_a_;
};

/// Pointwise product phi * rho for a [0,1]-valued factor; evaluation never
/// touches rho where phi vanishes, so the product extends rho's domain by 0.
class Scaled final : public PotentialImpl {
 public:
  Scaled(Potential rho, std::function<double(const SpherePoint&)> phi,
         std::function<CVec(const SpherePoint&)> phi_grad)
      : rho_(std::move(rho)), phi_(std::move(phi)), phi_grad_(std::move(phi_grad)) {}

  bool in_domain(const SpherePoint& p) const override {
    return phi_(p) == 0.0 || rho_.in_domain(p);
  }
  double eval(const SpherePoint& p) const override {
    const double f = phi_(p);
    return f == 0.0 ? 0.0 : f * rho_(p);
  }
  CVec gradient(const SpherePoint& p) const override {
    const double f = phi_(p);
    if (f == 0.0) return CVec::Zero(p.z().size());
    return CVec(f * rho_.gradient(p) + rho_(p) * phi_grad_(p));
  }

 private:
  Potential rho_;
  std::function<double(const SpherePoint&)> phi_;
  std::function<CVec(const SpherePoint&)> phi_grad_;
};

}  // namespace potentials

inline Potential constant_potential(double c) {
  return Potential(std::make_shared<potentials::Constant>(c));
}
inline Potential twist_potential(int a) {
  return Potential(std::make_shared<potentials::Twist>(a));
}

/// Libermann contact field of a potential.
class ContactField {
 public:
  explicit ContactField(Potential rho) : rho_(std::move(rho)) {}
  const Potential& potential() const { return rho_; }

  bool in_domain(const SpherePoint& p) const { return rho_.in_domain(p); }
  bool domain_is_global() const { return rho_.domain_is_global(); }

  CVec eval(const SpherePoint& p) const {
    const double r = rho_(p);
    CVec g = rho_.gradient(p);
    g -= cdot(p.z(), g).real() * p.z();
    g -= cdot(p.z(), g).imag() * (Complex(0, 1) * p.z());  // horizontal part
    return CVec(r * (Complex(0, 1) * p.z()) + 0.5 * (Complex(0, 1) * g));
  }

  TangentVector eval_tangent(const SpherePoint& p) const { return TangentVector(p, eval(p)); }

 private:
  Potential rho_;
};

inline ContactField libermann_field(Potential rho) { return ContactField(std::move(rho)); }

struct FlowResult {
  SpherePoint endpoint;
  double time_requested = 0;
  double time_reached = 0;
  bool domain_exit = false;
  int accepted_steps = 0;
  int rejected_steps = 0;
};

/// Adaptive RK4 (step doubling, relative tolerance tol, renormalization to
/// the sphere after each accepted step).  Exits with a partial trajectory and
/// a flag when the step underflows at the domain boundary.
inline FlowResult flow(const ContactField& field, const SpherePoint& p, double s,
                       double rel_tol = default_tols().flow_rel) {
  FlowResult out{p, s, 0.0, false, 0, 0};
  if (s == 0.0) return out;
  if (!field.in_domain(p)) throw DomainError("flow: start outside the field domain");

  const double sgn = s > 0 ? 1.0 : -1.0;
  const double total = std::abs(s);
  CVec z = p.z();
  double t = 0;
  double h = std::min(0.05, total);

  auto rk4 = [&](const CVec& y, double step) {
    auto vel = [&](const CVec& q) { return field.eval(SpherePoint(CVec(q))); };
    const CVec k1 = vel(y);
    const CVec k2 = vel(y + 0.5 * step * k1);
    const CVec k3 = vel(y + 0.5 * step * k2);
    const CVec k4 = vel(y + step * k3);
    CVec r = y + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    r /= r.norm();
    return r;
  };

  while (t < total) {
    h = std::min(h, total - t);
    bool domain_hit = false;
    CVec big, half;
    try {
      big = rk4(z, sgn * h);
      half = rk4(rk4(z, sgn * h / 2), sgn * h / 2);
    } catch (const DomainError&) {
      domain_hit = true;
    }
    if (!domain_hit && !field.domain_is_global()) {
      // A step may jump the excluded set and re-enter through the angle cut;
      // treat a wrapped polar angle as a domain hit (legitimate steps move
      // angles slowly wherever r is not tiny).
      const SpherePoint before{CVec(z)}, after{CVec(half)};
      for (int i = 0; i < before.z().size() && !domain_hit; ++i)
        if (before.r(i) > 0.05 && after.r(i) > 0.05 &&
            std::abs(after.theta(i) - before.theta(i)) > kPi)
          domain_hit = true;
    }
    if (!domain_hit) {
      const double err = (big - half).norm() / 15.0;
      const double tol = rel_tol * std::max(h, 1e-3);
      if (err <= tol) {
        z = half;
        t += h;
        ++out.accepted_steps;
        h *= std::min(2.0, std::max(0.3, 0.9 * std::pow(tol / std::max(err, 1e-300), 0.25)));
        continue;
      }
    }
    ++out.rejected_steps;
    h *= 0.5;
    if (h < 1e-10) {
      out.domain_exit = true;
      break;
    }
  }
  out.endpoint = SpherePoint(std::move(z));
  out.time_reached = sgn * t;
  return out;
}

/// Time-s flow map as a MapHandle.  Evaluation uses a fixed-step RK4 with
/// renormalization so the map is a smooth function of its input (finite
/// differences through an adaptive integrator would inherit step-selection
/// noise); the step count is sized for ~1e-10 accuracy on contact fields at
/// unit time.
class FlowMap final : public MapImpl {
 public:
  FlowMap(ContactField field, double time, int steps = 200)
      : field_(std::move(field)), time_(time), steps_(steps) {}

  SpherePoint eval(const SpherePoint& p) const override {
    CVec z = p.z();
    const double h = time_ / steps_;
    auto vel = [&](const CVec& q) { return field_.eval(SpherePoint(CVec(q))); };
    for (int k = 0; k < steps_; ++k) {
      const CVec k1 = vel(z);
      const CVec k2 = vel(z + 0.5 * h * k1);
      const CVec k3 = vel(z + 0.5 * h * k2);
      const CVec k4 = vel(z + h * k3);
      z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      z /= z.norm();
    }
    return SpherePoint(std::move(z));
  }
  bool in_smooth_domain(const SpherePoint& p) const override { return field_.in_domain(p); }
  std::string kind() const override { return "flow-defined"; }
  nlohmann::json descriptor() const override {
    return {{"kind", "flow-defined"}, {"time", time_}, {"steps", steps_}};
  }

 private:
  ContactField field_;
  double time_;
  int steps_;
};

inline MapHandle flow_map(ContactField field, double time, int steps = 200) {
  return MapHandle(std::make_shared<FlowMap>(std::move(field), time, steps));
}

/// C-infinity smoothstep: 0 for x <= 0, 1 for x >= 1.
inline double smoothstep(double x) {
  auto e = [](double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; };
  const double a = e(x), b = e(1.0 - x);
  return a / (a + b);
}

/// Radial bump in the gauge of the chart at `center`: exactly 0 on
/// {gauge <= lo}, exactly 1 on {gauge >= hi}.
struct GaugeBump {
  HeisenbergChart chart;
  double lo = 0, hi = 1;

  double operator()(const SpherePoint& p) const {
    const double g = chart.gauge_from_base(p);
    if (g <= lo) return 0.0;
    if (g >= hi) return 1.0;
    return smoothstep((g - lo) / (hi - lo));
  }

  /// 4th-order central differences of the 0-homogeneous extension.
  CVec gradient(const SpherePoint& p) const {
    const double g = chart.gauge_from_base(p);
    CVec out = CVec::Zero(p.z().size());
    if (g <= lo || g >= hi) return out;
    const double h = 1e-5;
    for (int i = 0; i < p.z().size(); ++i)
      for (int part = 0; part < 2; ++part) {
        const Complex dir = part == 0 ? Complex(1, 0) : Complex(0, 1);
        auto at = [&](double s) {
          CVec z = p.z();
          z[i] += s * dir;
          return (*this)(SpherePoint(std::move(z)));
        };
        const double d = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12 * h);
        out[i] += part == 0 ? Complex(d, 0) : Complex(0, d);
      }
    return out;
  }
};

/// Smooth phi: 1 on a neighborhood of every K sample, 0 on a neighborhood of
/// the inner ball, built from a smoothstep profile of the chart-gauge
/// distance surrogate.  delta defaults to gap/8; a gap below 4*delta is
/// rejected.
inline GaugeBump bump(const std::vector<SpherePoint>& k_outer, const SpherePoint& inner_center,
                      double inner_gauge_radius, double delta = -1.0) {
  if (k_outer.empty()) throw ContractViolation("bump: empty outer set");
  HeisenbergChart chart(inner_center);
  double b_hat = std::numeric_limits<double>::infinity();
  for (const auto& q : k_outer) b_hat = std::min(b_hat, chart.gauge_from_base(q));
  const double a_hat = inner_gauge_radius;
  const double gap = b_hat - a_hat;
  if (delta < 0) delta = gap / 8.0;
  if (!(gap > 0) || gap < 4.0 * delta)
    throw ContractViolation("bump: gap between the outer set and the inner ball is below 4 delta");
  return GaugeBump{chart, a_hat + delta, b_hat - delta};
}

struct TrapRadiusError : DomainError {
  TrapRadiusError(const std::string& msg, double admissible)
      : DomainError(msg), largest_admissible(admissible) {}
  double largest_admissible = 0;
};

struct TrapInterpolant {
  MapHandle g1;            // G_1: F_a outside B, rotation on B', flow between
  SpherePoint center;      // z_star
  double outer_radius;     // R
  double conformal_radius;  // radius of B' (cc ball around z_star)
  double largest_admissible_radius;
  double annulus_sup_push;  // measured extremes of the horizontal
  double annulus_inf_push;  // pushforward norms across the annulus
};

namespace detail_flow {

/// Points of the cc sphere S(x, r) on the (phi, lambda) geodesic grid.
inline std::vector<SpherePoint> sample_cc_sphere(const SpherePoint& x, double r, int n_phi = 16,
                                                 int n_beta = 9) {
  std::vector<SpherePoint> out;
  const double beta_max = std::sqrt(std::max(0.0, kPi * kPi - r * r)) * 0.999;
  for (int i = 0; i < n_phi; ++i)
    for (int j = 0; j < n_beta; ++j) {
      const double phi = -kPi + kTwoPi * i / n_phi;
      const double beta = -beta_max + 2.0 * beta_max * j / (n_beta - 1);
      out.push_back(geodesic_point(x, {phi, beta / r}, r));
    }
  return out;
}

/// Flow-domain certificate for the pure twist potential: H_s exists on the
/// closed ball through s = 1 (with 10% margin) iff a * max|theta_i| stays
/// below pi / 1.1 on the ball.
inline bool twist_flow_survives(const SpherePoint& z_prime, double radius, int a) {
  const double cap = kPi / (1.1 * a);
  for (double f : {1.0, 0.75, 0.5}) {
    for (const auto& q : sample_cc_sphere(z_prime, f * radius)) {
      double worst = 0;
      for (int i = 0; i < q.z().size(); ++i) worst = std::max(worst, std::abs(q.theta(i)));
      if (worst > cap) return false;
      if (q.min_radius() < default_tols().branch_locus) return false;
    }
  }
  return true;
}

inline double largest_admissible_radius(const SpherePoint& z_prime, int a) {
  double lo = 0.0, hi = kPi / 2;
  for (int it = 0; it < 20; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (twist_flow_survives(z_prime, mid, a))
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace detail_flow

/// The interpolating map G_1 of the trap construction: equals F_a outside
/// B(z_star, R), equals the rotation R_{(a-1)theta*} on B' = B(z_star, r'),
/// and in between the time-1 flow of the bump-modified twist potential,
/// conjugated through F_a = R_{a theta*} o F_a o R_{-theta*}.
inline TrapInterpolant trap_interpolant(int a, const SpherePoint& z_star, double R,
                                        double conformal_radius_hint = 0.0) {
  z_star.require_s3();
  if (a < 2) throw ContractViolation("trap_interpolant: a must be >= 2");
  if (z_star.on_branch_locus())
    throw ContractViolation("trap_interpolant: z_star on the branch locus");

  const SpherePoint z_prime =
      SpherePoint::from_polar(z_star.radii(), Eigen::VectorXd::Zero(z_star.z().size()));
  const double r_max = detail_flow::largest_admissible_radius(z_prime, a);
  if (!(R < r_max))
    throw TrapRadiusError("trap_interpolant: R too large, flow leaves its domain before s=1; "
                          "largest admissible R = " +
                              std::to_string(r_max),
                          r_max);

  // K := union of H_s(boundary of B(z', R)) over s in [0, 1].
  std::vector<SpherePoint> k_tube;
  for (const auto& q : detail_flow::sample_cc_sphere(z_prime, R)) {
    for (int sidx = 0; sidx <= 8; ++sidx) {
      const double s = sidx / 8.0;
      const double factor = std::pow(double(a), s);
      Eigen::VectorXd th = q.angles();
      for (int i = 0; i < th.size(); ++i) th[i] = wrap_angle(factor * th[i]);
      k_tube.push_back(SpherePoint::from_polar(q.radii(), th));
    }
  }

  // Bump levels in the gauge around z': zero zone up to b_eff/3, ramp inside
  // a 5% sampling margin of the tube.
  HeisenbergChart chart(z_prime);
  double b_hat = std::numeric_limits<double>::infinity();
  for (const auto& q : k_tube) b_hat = std::min(b_hat, chart.gauge_from_base(q));
  const double b_eff = 0.95 * b_hat;
  const double a_hat = b_eff / 3.0;
  auto phi_bump = bump(k_tube, z_prime, a_hat, (b_eff - a_hat) / 8.0);
  // bump() measured the tube itself; enforce the 5% margin on the top level.
  phi_bump.hi = std::min(phi_bump.hi, b_eff - (b_eff - a_hat) / 8.0);

  // Conformal radius: the largest cc ball around z' inside the zero zone.
  double r_zero = 0;
  {
    double lo = 0, hi = R;
    for (int it = 0; it < 30; ++it) {
      const double mid = 0.5 * (lo + hi);
      double worst = 0;
      for (const auto& q : detail_flow::sample_cc_sphere(z_prime, mid, 12, 7))
        worst = std::max(worst, chart.gauge_from_base(q));
      if (worst <= phi_bump.lo * 0.999)
        lo = mid;
      else
        hi = mid;
    }
    r_zero = lo;
  }
  if (!(r_zero > 0)) throw NumericalError("trap_interpolant: empty conformal ball");
  double r_conf = r_zero;
  if (conformal_radius_hint > 0) {
    if (conformal_radius_hint > r_zero)
      throw TrapRadiusError("trap_interpolant: requested conformal radius exceeds the zero zone",
                            r_zero);
    r_conf = conformal_radius_hint;
  }

  Potential rho_mod(std::make_shared<potentials::Scaled>(
      twist_potential(a), [phi_bump](const SpherePoint& p) { return phi_bump(p); },
      [phi_bump](const SpherePoint& p) { return phi_bump.gradient(p); }));
  ContactField field = libermann_field(rho_mod);

  struct Impl final : MapImpl {
    int a;
    SpherePoint z_star, z_prime;
    double R, zero_gauge;
    HeisenbergChart chart;
    MapHandle fa, rot_minus, rot_plus_a, rot_conf, flowm;

    Impl(int a_, SpherePoint zs, SpherePoint zp, double R_, double zg, HeisenbergChart ch,
         MapHandle flow_handle)
        : a(a_),
          z_star(std::move(zs)),
          z_prime(std::move(zp)),
          R(R_),
          zero_gauge(zg),
          chart(std::move(ch)),
          fa(multi_twist(a_)),
          rot_minus(rotation_map(Eigen::VectorXd(-z_star.angles()))),
          rot_plus_a(rotation_map(Eigen::VectorXd(double(a_) * z_star.angles()))),
          rot_conf(rotation_map(Eigen::VectorXd((a_ - 1.0) * z_star.angles()))),
          flowm(std::move(flow_handle)) {}

    bool inside_B(const SpherePoint& w) const {
      if (riemannian_lower_bound(z_prime, w) >= R) return false;
      if (auto c = connect_geodesic(z_prime, w)) return c->t < R;
      CcOptions o;
      o.restarts = 4;
      return cc_distance(z_prime, w, o).value < R;
    }

    SpherePoint eval(const SpherePoint& z) const override {
      const SpherePoint w = rot_minus(z);
      if (!inside_B(w)) return fa(z);
      if (chart.gauge_from_base(w) <= zero_gauge) return rot_conf(z);
      return rot_plus_a(flowm(w));
    }
    bool in_smooth_domain(const SpherePoint& p) const override {
      return !p.on_branch_locus();
    }
    std::string kind() const override { return "trap-interpolant"; }
    nlohmann::json descriptor() const override {
      return {{"kind", "trap-interpolant"},
              {"a", a},
              {"R", R},
              {"center_angles", std::vector<double>(z_star.angles().begin(),
                                                    z_star.angles().end())},
              {"center_radii",
               std::vector<double>(z_star.radii().begin(), z_star.radii().end())}};
    }
  };

  auto impl = std::make_shared<Impl>(a, z_star, z_prime, R, phi_bump.lo, chart,
                                     flow_map(field, 1.0));
  TrapInterpolant out{MapHandle(impl), z_star, R,   r_conf,
                      r_max,           0.0,    0.0};

  // Measured pushforward extremes across the interpolation annulus.
  out.annulus_sup_push = 0;
  out.annulus_inf_push = std::numeric_limits<double>::infinity();
  Rng rng(9001);
  for (int i = 0; i < 24; ++i) {
    const double rr = r_conf + (R - r_conf) * (i + 0.5) / 24.0;
    const SpherePoint w =
        geodesic_point(z_prime, {rng.uniform(-kPi, kPi), rng.uniform(-1.5, 1.5)}, rr);
    const SpherePoint z = rotation_map(Eigen::VectorXd(z_star.angles()))(w);
    auto [lo, hi] = eigen_distortion(out.g1, z);
    out.annulus_sup_push = std::max(out.annulus_sup_push, hi);
    out.annulus_inf_push = std::min(out.annulus_inf_push, lo);
  }
  return out;
}

}  // namespace srqr
