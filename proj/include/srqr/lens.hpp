// Lens spaces L_{p,q} = S^{2n+1} / <R_{p,q}> with canonical orbit
// representatives and the quotient cc distance.
#pragma once

#include <numeric>
#include <vector>

#include "srqr/cc_distance.hpp"
#include "srqr/sphere.hpp"

namespace srqr {

struct LensSpec {
  int p = 2;
  std::vector<int> q;  // length n+1, each coprime to p

  LensSpec(int p_, std::vector<int> q_) : p(p_), q(std::move(q_)) {
    if (p <= 1) throw ContractViolation("LensSpec: p must exceed 1");
    for (int qi : q)
      if (std::gcd(((qi % p) + p) % p, p) != 1)
        throw ContractViolation("LensSpec: q_i must be coprime to p");
  }

  bool operator==(const LensSpec& o) const { return p == o.p && q == o.q; }

  /// The generator R_{p,q}^k applied to a sphere point.
  SpherePoint rotate(const SpherePoint& z, int k) const {
    if (int(q.size()) != z.n() + 1) throw ContractViolation("LensSpec: dimension mismatch");
    CVec w(z.z().size());
    for (int i = 0; i < w.size(); ++i)
      w[i] = z.z()[i] * std::polar(1.0, kTwoPi * q[i] * k / double(p));
    return SpherePoint(std::move(w));
  }
};

/// Orbit representative with the lexicographically smallest angle tuple
/// (ties broken by smallest rotation index), so equality and hashing are
/// deterministic.
class LensPoint {
 public:
  LensPoint(const SpherePoint& z, LensSpec spec) : spec_(std::move(spec)), rep_(canonical(z)) {}

  const SpherePoint& representative() const { return rep_; }
  const LensSpec& spec() const { return spec_; }

  /// All p lifts of the class.
  std::vector<SpherePoint> lifts() const {
    std::vector<SpherePoint> out;
    out.reserve(spec_.p);
    for (int k = 0; k < spec_.p; ++k) out.push_back(spec_.rotate(rep_, k));
    return out;
  }

  bool same_class(const SpherePoint& z, double tol = 1e-9) const {
    for (int k = 0; k < spec_.p; ++k)
      if (spec_.rotate(z, k).close_to(rep_, tol)) return true;
    return false;
  }

 private:
  SpherePoint canonical(const SpherePoint& z) const {
    int best = 0;
    SpherePoint bestp = spec_.rotate(z, 0);
    for (int k = 1; k < spec_.p; ++k) {
      SpherePoint cand = spec_.rotate(z, k);
      if (angle_less(cand, bestp)) {
        best = k;
        bestp = cand;
      }
    }
    (void)best;
    return bestp;
  }
  static bool angle_less(const SpherePoint& a, const SpherePoint& b) {
    for (int i = 0; i < a.z().size(); ++i) {
      const double d = a.theta(i) - b.theta(i);
      if (std::abs(d) > 1e-12) return d < 0;
    }
    return false;
  }

  LensSpec spec_;
  SpherePoint rep_;
};

inline LensPoint lens_project(const SpherePoint& z, const LensSpec& spec) {
  return LensPoint(z, spec);
}

inline void require_same_spec(const LensPoint& x, const LensPoint& y) {
  if (!(x.spec() == y.spec())) throw ContractViolation("lens points with different specs");
}

/// Quotient distance: min over the p orbit rotations of the sphere distance.
inline CcResult lens_distance(const LensPoint& x, const LensPoint& y,
                              const CcOptions& opt = {}) {
  require_same_spec(x, y);
  CcResult best;
  best.value = std::numeric_limits<double>::infinity();
  for (int k = 0; k < x.spec().p; ++k) {
    auto r = cc_distance(x.representative(), x.spec().rotate(y.representative(), k), opt);
    if (r.value < best.value) best = r;
  }
  return best;
}

/// Fast quotient distance through the closed-form geodesic solver.  Orbit
/// rotations where the shooting solver finds no branch fall back to the
/// transcription optimizer.
inline double lens_distance_fast(const LensPoint& x, const LensPoint& y) {
  require_same_spec(x, y);
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < x.spec().p; ++k) {
    const SpherePoint rot = x.spec().rotate(y.representative(), k);
    if (auto c = connect_geodesic(x.representative(), rot)) {
      best = std::min(best, c->t);
      continue;
    }
    CcOptions o;
    o.restarts = 4;
    best = std::min(best, cc_distance(x.representative(), rot, o).value);
  }
  return best;
}

}  // namespace srqr
