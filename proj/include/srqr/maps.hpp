// Closed-form self-maps of the sphere: multi-twists, rotations, unitaries,
// loxodromics, the antipodal map, inversions built from them, composites, and
// the maps they induce on lens spaces.
#pragma once

#include <functional>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "srqr/geodesics.hpp"
#include "srqr/lens.hpp"
#include "srqr/sphere.hpp"

namespace srqr {

class MapImpl {
 public:
  virtual ~MapImpl() = default;
  virtual SpherePoint eval(const SpherePoint& p) const = 0;
  virtual bool in_smooth_domain(const SpherePoint&) const { return true; }
  /// Closed-form derivative applied to an ambient tangent representative;
  /// nullopt defers to finite differences.
  virtual std::optional<CVec> d_apply(const SpherePoint&, const CVec&) const {
    return std::nullopt;
  }
  virtual std::string kind() const = 0;
  virtual nlohmann::json descriptor() const = 0;
};

/// Immutable, shareable handle.  Evaluations always return renormalized
/// points, so outputs land on the sphere by construction.
class MapHandle {
 public:
  explicit MapHandle(std::shared_ptr<const MapImpl> impl) : impl_(std::move(impl)) {}

  SpherePoint operator()(const SpherePoint& p) const { return impl_->eval(p); }
  bool in_smooth_domain(const SpherePoint& p) const { return impl_->in_smooth_domain(p); }
  std::string kind() const { return impl_->kind(); }
  nlohmann::json descriptor() const { return impl_->descriptor(); }
  const MapImpl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const MapImpl> impl_;
};

namespace maps {

class MultiTwist final : public MapImpl {
 public:
  explicit MultiTwist(int a) : a_(a) {
    if (a == 0) throw ContractViolation("multi_twist: a must be nonzero");
  }
  int a() const { return a_; }

  SpherePoint eval(const SpherePoint& p) const override {
    CVec w(p.z().size());
    for (int i = 0; i < w.size(); ++i) w[i] = std::polar(p.r(i), wrap_angle(a_ * p.theta(i)));
    return SpherePoint(std::move(w));
  }

  bool in_smooth_domain(const SpherePoint& p) const override { return !p.on_branch_locus(); }

  std::optional<CVec> d_apply(const SpherePoint& p, const CVec& v) const override {
    if (p.on_branch_locus()) throw DomainError("multi_twist derivative on the branch locus");
    CVec w(v.size());
    for (int i = 0; i < v.size(); ++i) {
      const double th = p.theta(i), r = p.r(i);
      // polar components of the i-th slot
      const double vx = v[i].real(), vy = v[i].imag();
      const double vr = std::cos(th) * vx + std::sin(th) * vy;
      const double vt = (std::cos(th) * vy - std::sin(th) * vx) / r;  // dtheta(v)
      const double ath = a_ * th;
      w[i] = Complex(vr * std::cos(ath) - a_ * vt * r * std::sin(ath),
                     vr * std::sin(ath) + a_ * vt * r * std::cos(ath));
    }
    return w;
  }

  std::string kind() const override { return "multi-twist"; }
  nlohmann::json descriptor() const override {
    return {{"kind", "multi-twist"}, {"a", a_}};
  }

 private:
  int a_;
};

class Rotation final : public MapImpl {
 public:
  explicit Rotation(Eigen::VectorXd angles) : th_(std::move(angles)) {}
  const Eigen::VectorXd& angles() const { return th_; }

  SpherePoint eval(const SpherePoint& p) const override {
    check_dim(p);
    CVec w(p.z().size());
    for (int i = 0; i < w.size(); ++i) w[i] = p.z()[i] * std::polar(1.0, th_[i]);
    return SpherePoint(std::move(w));
  }
  std::optional<CVec> d_apply(const SpherePoint& p, const CVec& v) const override {
    check_dim(p);
    CVec w(v.size());
    for (int i = 0; i < w.size(); ++i) w[i] = v[i] * std::polar(1.0, th_[i]);
    return w;
  }
  std::string kind() const override { return "rotation"; }
  nlohmann::json descriptor() const override {
    return {{"kind", "rotation"}, {"angles", std::vector<double>(th_.begin(), th_.end())}};
  }

 private:
  void check_dim(const SpherePoint& p) const {
    if (th_.size() != p.z().size()) throw ContractViolation("rotation: dimension mismatch");
  }
  Eigen::VectorXd th_;
};

class Unitary final : public MapImpl {
 public:
  explicit Unitary(Eigen::MatrixXcd u) : u_(std::move(u)) {}

  SpherePoint eval(const SpherePoint& p) const override { return SpherePoint(u_ * p.z()); }
  std::optional<CVec> d_apply(const SpherePoint&, const CVec& v) const override {
    return CVec(u_ * v);
  }
  std::string kind() const override { return "unitary"; }
  nlohmann::json descriptor() const override {
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < u_.rows(); ++i) {
      std::vector<double> row;
      for (int j = 0; j < u_.cols(); ++j) {
        row.push_back(u_(i, j).real());
        row.push_back(u_(i, j).imag());
      }
      rows.push_back(std::move(row));
    }
    return {{"kind", "unitary"}, {"matrix", rows}};
  }

  /// Unitary carrying z0 to the pole (1, 0, ..., 0): a complex Householder
  /// reflection onto beta e1 (beta = -e^{i arg z0_0}) plus a phase fix.
  static Eigen::MatrixXcd to_pole(const SpherePoint& z0) {
    const int m = int(z0.z().size());
    const Complex x0 = z0.z()[0];
    const Complex beta = (std::abs(x0) < 1e-14) ? Complex(-1, 0) : -x0 / std::abs(x0);
    CVec u = z0.z();
    u[0] -= beta;
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Identity(m, m);
    if (u.norm() > 1e-14) H -= 2.0 * (u * u.adjoint()) / u.squaredNorm();
    Eigen::MatrixXcd D = Eigen::MatrixXcd::Identity(m, m);
    D(0, 0) = std::conj(beta);
    return D * H;
  }

 private:
  Eigen::MatrixXcd u_;
};

class Antipodal final : public MapImpl {
 public:
  SpherePoint eval(const SpherePoint& p) const override { return SpherePoint(CVec(-p.z())); }
  std::optional<CVec> d_apply(const SpherePoint&, const CVec& v) const override {
    return CVec(-v);
  }
  std::string kind() const override { return "antipodal"; }
  nlohmann::json descriptor() const override { return {{"kind", "antipodal"}}; }
};

class Loxodromic final : public MapImpl {
 public:
  explicit Loxodromic(double d) : d_(d), c_(std::cosh(d)), s_(std::sinh(d)) {}
  double d() const { return d_; }

  SpherePoint eval(const SpherePoint& p) const override {
    const Complex den = s_ * p.z()[0] + c_;
    if (std::abs(den) < 1e-12) throw DomainError("loxodromic: evaluation at its pole");
    CVec w(p.z().size());
    w[0] = (c_ * p.z()[0] + s_) / den;
    for (int i = 1; i < w.size(); ++i) w[i] = p.z()[i] / den;
    return SpherePoint(std::move(w));
  }

  std::optional<CVec> d_apply(const SpherePoint& p, const CVec& v) const override {
    const Complex den = s_ * p.z()[0] + c_;
    if (std::abs(den) < 1e-12) throw DomainError("loxodromic: derivative at its pole");
    CVec w(v.size());
    w[0] = v[0] / (den * den);  // (c^2 - s^2) = 1
    for (int i = 1; i < w.size(); ++i)
      w[i] = v[i] / den - p.z()[i] * s_ * v[0] / (den * den);
    return w;
  }

  std::string kind() const override { return "loxodromic"; }
  nlohmann::json descriptor() const override {
    return {{"kind", "loxodromic"}, {"d", d_}};
  }

 private:
  double d_, c_, s_;
};

class Composite final : public MapImpl {
 public:
  explicit Composite(std::vector<MapHandle> parts, std::string kind = "composite")
      : parts_(std::move(parts)), kind_(std::move(kind)) {
    if (parts_.empty()) throw ContractViolation("composite: needs at least one map");
  }
  const std::vector<MapHandle>& parts() const { return parts_; }

  SpherePoint eval(const SpherePoint& p) const override {
    SpherePoint q = p;
    for (const auto& m : parts_) q = m(q);
    return q;
  }
  bool in_smooth_domain(const SpherePoint& p) const override {
    SpherePoint q = p;
    for (const auto& m : parts_) {
      if (!m.in_smooth_domain(q)) return false;
      q = m(q);
    }
    return true;
  }
  std::optional<CVec> d_apply(const SpherePoint& p, const CVec& v) const override;

  std::string kind() const override { return kind_; }
  nlohmann::json descriptor() const override {
    nlohmann::json parts = nlohmann::json::array();
    for (const auto& m : parts_) parts.push_back(m.descriptor());
    return {{"kind", kind_}, {"maps", parts}};
  }

 private:
  std::vector<MapHandle> parts_;
  std::string kind_;
};

}  // namespace maps

inline MapHandle multi_twist(int a) {
  return MapHandle(std::make_shared<maps::MultiTwist>(a));
}

inline MapHandle rotation_map(const Eigen::VectorXd& angles) {
  return MapHandle(std::make_shared<maps::Rotation>(angles));
}

inline MapHandle unitary_map(Eigen::MatrixXcd u) {
  return MapHandle(std::make_shared<maps::Unitary>(std::move(u)));
}

inline MapHandle antipodal_map() { return MapHandle(std::make_shared<maps::Antipodal>()); }

inline MapHandle loxodromic_map(double d) {
  return MapHandle(std::make_shared<maps::Loxodromic>(d));
}

inline MapHandle compose(std::vector<MapHandle> parts, std::string kind = "composite") {
  return MapHandle(std::make_shared<maps::Composite>(std::move(parts), std::move(kind)));
}

inline MapHandle identity_map() { return multi_twist(1); }

/// Derivative applied to an ambient tangent representative, closed form when
/// the implementation provides one and Richardson-refined central differences
/// (base step 1e-6) otherwise.
inline CVec map_d_apply(const MapHandle& m, const SpherePoint& p, const CVec& v) {
  if (auto w = m.impl().d_apply(p, v)) return *w;
  const double nv = v.norm();
  if (nv < 1e-300) return CVec::Zero(v.size());
  const CVec dir = v / nv;
  auto diff = [&](double h) -> CVec {
    const SpherePoint plus(CVec(p.z() + h * dir)), minus(CVec(p.z() - h * dir));
    return (m(plus).z() - m(minus).z()) / (2.0 * h);
  };
  const double h = 1e-6;
  const CVec d1 = diff(h), d2 = diff(2.0 * h);
  return nv * (4.0 * d1 - d2) / 3.0;
}

inline std::optional<CVec> maps::Composite::d_apply(const SpherePoint& p, const CVec& v) const {
  SpherePoint q = p;
  CVec w = v;
  for (const auto& m : parts_) {
    w = map_d_apply(m, q, w);
    q = m(q);
  }
  return w;
}

/// Pushforward of a tangent vector (projects away the ambient-normal defect).
inline TangentVector pushforward_tangent(const MapHandle& m, const SpherePoint& p,
                                         const TangentVector& v) {
  require_same_base(p, v.base());
  CVec w = map_d_apply(m, p, v.v());
  const SpherePoint q = m(p);
  w -= cdot(q.z(), w).real() * q.z();
  return TangentVector(q, std::move(w));
}

/// Pushforward of a horizontal vector.  Certifies that the image is
/// horizontal (within 1e-7 relative) before returning the projected vector.
inline HorizontalVector pushforward(const MapHandle& m, const SpherePoint& p,
                                    const HorizontalVector& v) {
  if (!m.in_smooth_domain(p)) throw DomainError("pushforward: point outside smooth domain");
  TangentVector w = pushforward_tangent(m, p, v.tangent());
  const double res = std::abs(contact_form(w.base(), w));
  if (res > 1e-7 * std::max(1e-30, w.norm()))
    throw NumericalError("pushforward: image vector is not horizontal");
  return horizontal_project(w.base(), w);
}

/// Scalar c with m^* alpha = c alpha at p, read off the Reeb direction; the
/// horizontal kernel must be preserved (residual <= 1e-6) or the map is
/// declared non-contact.
inline double pullback_contact_factor(const MapHandle& m, const SpherePoint& p) {
  if (!m.in_smooth_domain(p))
    throw DomainError("pullback_contact_factor: point outside smooth domain");
  const SpherePoint q = m(p);
  for (double phi : {0.0, kPi / 2}) {
    const HorizontalVector e(p, frame_dir(p, phi));
    const TangentVector w = pushforward_tangent(m, p, e.tangent());
    if (std::abs(contact_form(q, w)) > 1e-6 * std::max(1e-30, w.norm()))
      throw NumericalError("pullback_contact_factor: not a contact map");
  }
  const TangentVector t_img = pushforward_tangent(m, p, reeb(p));
  return contact_form(q, t_img);
}

/// Sphere preimages of `target` under F_a: the a^{n+1} angle tuples
/// (theta_i + 2 pi k_i) / a.
inline std::vector<SpherePoint> twist_preimages(int a, const SpherePoint& target) {
  if (a == 0) throw ContractViolation("twist_preimages: a must be nonzero");
  if (target.on_branch_locus())
    throw DomainError(
        "twist_preimages: target on the branch locus (infinite families, not enumerated)");
  const int slots = int(target.z().size());
  const int aa = std::abs(a);
  std::vector<SpherePoint> out;
  std::vector<int> k(slots, 0);
  for (;;) {
    Eigen::VectorXd th(slots);
    for (int i = 0; i < slots; ++i)
      th[i] = wrap_angle((target.theta(i) + kTwoPi * k[i]) / double(a));
    out.push_back(SpherePoint::from_polar(target.radii(), th));
    int i = 0;
    while (i < slots && ++k[i] == aa) k[i++] = 0;
    if (i == slots) break;
  }
  return out;
}

/// Lens preimage classes (N = a^{n+1} / p of them for p | a).
inline std::vector<LensPoint> twist_preimages(int a, const SpherePoint& target,
                                              const LensSpec& spec) {
  auto sphere_pre = twist_preimages(a, target);
  std::vector<LensPoint> classes;
  for (const auto& z : sphere_pre) {
    LensPoint c = lens_project(z, spec);
    bool dup = false;
    for (const auto& e : classes)
      if (e.representative().close_to(c.representative(), 1e-9)) {
        dup = true;
        break;
      }
    if (!dup) classes.push_back(std::move(c));
  }
  return classes;
}

/// Multi-twist induced on the lens space; requires p | a so that evaluation
/// is independent of the orbit representative.
class LensMultiTwist {
 public:
  LensMultiTwist(int a, LensSpec spec) : a_(a), spec_(std::move(spec)), f_(multi_twist(a)) {
    if (a_ % spec_.p != 0)
      throw ContractViolation(
          "lens_multi_twist: a must be a multiple of p (else F_a does not descend)");
  }

  int a() const { return a_; }
  const LensSpec& spec() const { return spec_; }
  const MapHandle& sphere_map() const { return f_; }

  /// f_a : L_{p,q} -> S^{2n+1}
  SpherePoint eval(const LensPoint& x) const { return f_(x.representative()); }
  /// pi o f_a : L_{p,q} -> L_{p,q}
  LensPoint eval_lens(const LensPoint& x) const { return lens_project(eval(x), spec_); }

 private:
  int a_;
  LensSpec spec_;
  MapHandle f_;
};

inline LensMultiTwist lens_multi_twist(int a, const LensSpec& spec) {
  return LensMultiTwist(a, spec);
}

struct InversionResult {
  MapHandle map;                       // the involution iota
  std::function<bool(const SpherePoint&)> in_B;  // achieved swap region
  double achieved_radius_min = 0;      // inradius of B around the center
  double achieved_radius_max = 0;      // circumradius of B around the center
  double loxodromic_d = 0;
  SpherePoint center;
};

namespace detail_maps {

/// Sampled cc radius extremes of B(d) = U^{-1} T_d {Re z1 > 0} around z0.
inline std::pair<double, double> inversion_region_radii(const SpherePoint& z0,
                                                        const Eigen::MatrixXcd& u_mat,
                                                        double d, int samples = 24) {
  const Eigen::MatrixXcd u_inv = u_mat.adjoint();
  maps::Loxodromic lox(d);
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0;
  for (int i = 0; i < samples; ++i)
    for (int j = 0; j < samples / 2; ++j) {
      // Equator {Re z1 = 0}: z1 = i sin(psi), z2 = cos(psi) e^{i phi}.
      const double psi = -kPi / 2 + kPi * (j + 0.5) / (samples / 2);
      const double phi = -kPi + kTwoPi * i / samples;
      CVec e(2);
      e << Complex(0.0, std::sin(psi)), std::polar(std::cos(psi), phi);
      const SpherePoint boundary(CVec(u_inv * lox.eval(SpherePoint(std::move(e))).z()));
      const double r = sphere_distance_fast(z0, boundary);
      rmin = std::min(rmin, r);
      rmax = std::max(rmax, r);
    }
  return {rmin, rmax};
}

}  // namespace detail_maps

/// Conformal inversion swapping a region B around z0 (contained in the
/// requested ball B(z0, rho)) with the complement of its closure:
/// iota = U^{-1} T_d iota_0 T_{-d} U with d found by bisection.  The achieved
/// region is an output, not an input contract.
inline InversionResult make_inversion(const SpherePoint& z0, double rho) {
  z0.require_s3();
  if (!(rho > 1e-4)) throw ContractViolation("make_inversion: rho too small");
  if (rho >= kPi / 2)
    throw ContractViolation("make_inversion: rho must be below half the diameter (pi/2)");

  const Eigen::MatrixXcd u_mat = maps::Unitary::to_pole(z0);
  // T_d shrinks the right hemisphere toward the pole monotonically in d;
  // bisect until the circumradius of the achieved region matches 0.98 rho.
  double lo = 0.05, hi = 14.0;
  auto radius_max = [&](double d) {
    return detail_maps::inversion_region_radii(z0, u_mat, d).second;
  };
  if (radius_max(lo) < rho)
    throw ContractViolation("make_inversion: requested ball too large for the construction");
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (radius_max(mid) > 0.98 * rho)
      lo = mid;
    else
      hi = mid;
  }
  const double d = hi;
  auto radii = detail_maps::inversion_region_radii(z0, u_mat, d);

  MapHandle u = unitary_map(u_mat);
  MapHandle u_back = unitary_map(Eigen::MatrixXcd(u_mat.adjoint()));
  MapHandle iota = compose({u, loxodromic_map(-d), antipodal_map(), loxodromic_map(d), u_back},
                           "inversion");
  maps::Loxodromic lox_neg(-d);
  auto in_B = [u_mat, lox_neg](const SpherePoint& x) {
    const SpherePoint w = lox_neg.eval(SpherePoint(CVec(u_mat * x.z())));
    return w.z()[0].real() > 0.0;
  };
  return InversionResult{iota, in_B, radii.first, radii.second, d, z0};
}

/// Conformal map families of the sphere (spec surface).
inline MapHandle make_conformal_rotation(const Eigen::VectorXd& angles) {
  return rotation_map(angles);
}
inline MapHandle make_conformal_loxodromic(double d) { return loxodromic_map(d); }
inline MapHandle make_conformal_antipodal() { return antipodal_map(); }
inline InversionResult make_conformal_inversion(const SpherePoint& center, double rho) {
  return make_inversion(center, rho);
}

}  // namespace srqr
