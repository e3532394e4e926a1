// The conformal-trap UQR construction on lens spaces:
//   g = pi o iota o g1 : L -> L      G = iota o g1 o pi : S^3 -> S^3
// where g1 modifies the lens multi-twist f_a by trap interpolants around x_0
// and the N = a^{n+1}/p preimages of its lift z_0, and iota is a conformal
// inversion swapping a small region B around z_0 with the complement of its
// closure.  Orbits see distortion at most once: every point outside the
// conformal balls is mapped into the trap pi(B) and stays there.
#pragma once

#include <array>
#include <map>
#include <optional>

#include "srqr/distortion.hpp"
#include "srqr/flow.hpp"
#include "srqr/lens.hpp"
#include "srqr/maps.hpp"

namespace srqr {

enum class Region { Trap, ConformalBall, Transit };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::Trap:
      return "TRAP";
    case Region::ConformalBall:
      return "CONFORMAL_BALL";
    default:
      return "TRANSIT";
  }
}

struct TrapOverrides {
  std::optional<SpherePoint> z0;
  std::optional<double> modification_radius;  // R
  std::optional<double> conformal_radius;     // r'
  std::optional<double> inversion_rho;
};

struct TrapConfig {
  int a = 2;
  LensSpec spec{2, {1, 1}};
  SpherePoint z0{[] {
    CVec z(2);
    z << Complex(1, 0), Complex(0, 0);
    return z;
  }()};
  int preimage_count = 0;       // N
  double modification_radius = 0;  // R
  double conformal_radius = 0;     // r'
  double inversion_rho = 0;        // requested inversion ball radius
  double inversion_d = 0;          // achieved loxodromic parameter
  double neighborhood_radius_u = 0;
  double neighborhood_radius_v = 0;
};

namespace detail_trap {

/// Immutable assembled state, shared between the lens-map view and the
/// sphere-level MapHandle so handles stay valid however UQRMap is moved.
struct TrapState {
  TrapConfig cfg;
  std::vector<SpherePoint> lifts;          // z_0, z_1, ..., z_N
  std::vector<TrapInterpolant> interp;     // matching interpolants
  InversionResult inv;
  MapHandle fa;
  std::vector<LensPoint> centers;

  static double fast_distance(const SpherePoint& a, const SpherePoint& b) {
    if (auto c = connect_geodesic(a, b)) return c->t;
    CcOptions o;
    o.restarts = 4;
    return cc_distance(a, b, o).value;
  }

  MapHandle rotation_handle(int k) const {
    Eigen::VectorXd th(cfg.spec.q.size());
    for (int i = 0; i < th.size(); ++i) th[i] = kTwoPi * cfg.spec.q[i] * k / double(cfg.spec.p);
    return rotation_map(th);
  }

  /// Which modification ball (if any) contains a lift of this class, and
  /// through which rotation.
  std::optional<std::pair<int, int>> dispatch(const SpherePoint& rep) const {
    for (std::size_t i = 0; i < lifts.size(); ++i)
      for (int k = 0; k < cfg.spec.p; ++k) {
        const SpherePoint w = cfg.spec.rotate(rep, k);
        if (riemannian_lower_bound(w, lifts[i]) >= cfg.modification_radius) continue;
        if (fast_distance(w, lifts[i]) < cfg.modification_radius)
          return std::make_pair(int(i), k);
      }
    return std::nullopt;
  }

  SpherePoint eval_g1(const SpherePoint& rep) const {
    if (auto hit = dispatch(rep))
      return interp[hit->first].g1(cfg.spec.rotate(rep, hit->second));
    return fa(rep);
  }
};

struct SphereGImpl final : MapImpl {
  std::shared_ptr<const TrapState> s;
  explicit SphereGImpl(std::shared_ptr<const TrapState> st) : s(std::move(st)) {}
  SpherePoint eval(const SpherePoint& w) const override { return s->inv.map(s->eval_g1(w)); }
  bool in_smooth_domain(const SpherePoint& p) const override { return !p.on_branch_locus(); }
  std::string kind() const override { return "trap-uqr-sphere"; }
  nlohmann::json descriptor() const override {
    return {{"kind", "trap-uqr-sphere"}, {"a", s->cfg.a}, {"p", s->cfg.spec.p}};
  }
};

}  // namespace detail_trap

class UQRMap {
 public:
  UQRMap(TrapConfig cfg, std::vector<SpherePoint> center_lifts,
         std::vector<TrapInterpolant> interpolants, InversionResult inversion) {
    auto st = std::make_shared<detail_trap::TrapState>(detail_trap::TrapState{
        std::move(cfg), std::move(center_lifts), std::move(interpolants),
        std::move(inversion), multi_twist(1), {}});
    st->fa = multi_twist(st->cfg.a);
    for (const auto& z : st->lifts) st->centers.emplace_back(z, st->cfg.spec);
    s_ = std::move(st);
    G_.emplace(std::make_shared<detail_trap::SphereGImpl>(s_));
  }

  const TrapConfig& config() const { return s_->cfg; }
  const LensSpec& spec() const { return s_->cfg.spec; }
  int preimage_count() const { return s_->cfg.preimage_count; }
  const std::vector<LensPoint>& ball_centers() const { return s_->centers; }
  const std::vector<SpherePoint>& center_lifts() const { return s_->lifts; }
  const std::vector<TrapInterpolant>& interpolants() const { return s_->interp; }
  const InversionResult& inversion() const { return s_->inv; }
  const MapHandle& sphere_map() const { return *G_; }

  /// g = pi o iota o g1.
  LensPoint eval(const LensPoint& x) const {
    return lens_project(s_->inv.map(s_->eval_g1(x.representative())), s_->cfg.spec);
  }

  SpherePoint eval_g1(const SpherePoint& rep) const { return s_->eval_g1(rep); }

  Region region(const LensPoint& x, int* ball_index = nullptr) const {
    for (int k = 0; k < s_->cfg.spec.p; ++k)
      if (s_->inv.in_B(s_->cfg.spec.rotate(x.representative(), k))) {
        if (ball_index) *ball_index = 0;  // pi(B) sits inside B'_0
        return Region::Trap;
      }
    for (std::size_t i = 0; i < s_->lifts.size(); ++i)
      for (int k = 0; k < s_->cfg.spec.p; ++k) {
        const SpherePoint w = s_->cfg.spec.rotate(x.representative(), k);
        if (riemannian_lower_bound(w, s_->lifts[i]) >= s_->cfg.conformal_radius) continue;
        if (detail_trap::TrapState::fast_distance(w, s_->lifts[i]) < s_->cfg.conformal_radius) {
          if (ball_index) *ball_index = int(i);
          return Region::ConformalBall;
        }
      }
    if (ball_index) *ball_index = -1;
    return Region::Transit;
  }

  /// One step of g together with the 2x2 horizontal differential between the
  /// frames at the canonical representatives.
  std::pair<LensPoint, Eigen::Matrix2d> step_with_matrix(const LensPoint& x) const {
    const SpherePoint& z = x.representative();
    if (z.on_branch_locus()) throw DomainError("step_with_matrix: branch locus");
    Eigen::Matrix2d chain = Eigen::Matrix2d::Identity();
    SpherePoint y1 = z;
    if (auto hit = s_->dispatch(z)) {
      const auto [i, k] = *hit;
      const SpherePoint w = s_->cfg.spec.rotate(z, k);
      if (k != 0) chain = horizontal_matrix(s_->rotation_handle(k), z) * chain;
      chain = horizontal_matrix(s_->interp[i].g1, w) * chain;
      y1 = s_->interp[i].g1(w);
    } else {
      chain = horizontal_matrix(s_->fa, z) * chain;
      y1 = s_->fa(z);
    }
    chain = horizontal_matrix(s_->inv.map, y1) * chain;
    const SpherePoint y2 = s_->inv.map(y1);
    LensPoint next = lens_project(y2, s_->cfg.spec);
    for (int k = 0; k < s_->cfg.spec.p; ++k)
      if (s_->cfg.spec.rotate(y2, k).close_to(next.representative(), 1e-9)) {
        if (k != 0) chain = horizontal_matrix(s_->rotation_handle(k), y2) * chain;
        break;
      }
    return {std::move(next), chain};
  }

  /// Inverse branches of g for targets off the trap: one per (lift, ball)
  /// pair through the closed-form rotation inverse inside the conformal
  /// balls.  Every candidate is verified by forward evaluation.
  std::vector<LensPoint> preimages(const LensPoint& y, int* pruned = nullptr) const {
    std::vector<LensPoint> out;
    for (auto& [pt, label] : preimages_with_labels(y, pruned)) out.push_back(std::move(pt));
    return out;
  }

  /// Preimages tagged with a stable branch label (lift rotation, ball index).
  std::vector<std::pair<LensPoint, std::size_t>> preimages_with_labels(
      const LensPoint& y, int* pruned = nullptr) const {
    std::vector<std::pair<LensPoint, std::size_t>> out;
    for (int k = 0; k < s_->cfg.spec.p; ++k) {
      const SpherePoint lift = s_->cfg.spec.rotate(y.representative(), k);
      if (s_->inv.in_B(lift)) continue;
      const SpherePoint w = s_->inv.map(lift);
      for (std::size_t i = 1; i < s_->lifts.size(); ++i) {
        // g1 = R_{(a-1) theta_i} on the conformal ball around lift i.
        const SpherePoint cand =
            rotation_map(Eigen::VectorXd((1.0 - s_->cfg.a) * s_->lifts[i].angles()))(w);
        if (riemannian_lower_bound(cand, s_->lifts[i]) >= s_->cfg.conformal_radius ||
            detail_trap::TrapState::fast_distance(cand, s_->lifts[i]) >=
                s_->cfg.conformal_radius) {
          if (pruned) ++*pruned;
          continue;
        }
        LensPoint cls = lens_project(cand, s_->cfg.spec);
        if (!eval(cls).representative().close_to(y.representative(), 1e-8)) {
          if (pruned) ++*pruned;
          continue;
        }
        bool dup = false;
        for (const auto& e : out)
          if (e.first.representative().close_to(cls.representative(), 1e-9)) dup = true;
        if (!dup)
          out.emplace_back(std::move(cls), std::size_t(k) * s_->lifts.size() + i);
      }
    }
    return out;
  }

  static double fast_distance(const SpherePoint& a, const SpherePoint& b) {
    return detail_trap::TrapState::fast_distance(a, b);
  }

 private:
  std::shared_ptr<const detail_trap::TrapState> s_;
  std::optional<MapHandle> G_;
};

namespace detail_trap {

inline double min_pairwise_lens_distance(const std::vector<SpherePoint>& lifts,
                                         const LensSpec& spec) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lifts.size(); ++i)
    for (std::size_t j = i + 1; j < lifts.size(); ++j)
      best = std::min(best, lens_distance_fast(LensPoint(lifts[i], spec),
                                               LensPoint(lifts[j], spec)));
  return best;
}

/// Injectivity margin: distance from each lift to its own nontrivial orbit
/// rotations.
inline double min_orbit_separation(const std::vector<SpherePoint>& lifts, const LensSpec& spec) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& z : lifts)
    for (int k = 1; k < spec.p; ++k)
      best = std::min(best, UQRMap::fast_distance(z, spec.rotate(z, k)));
  return best;
}

}  // namespace detail_trap

/// Assemble the trap UQR pair (g, G).  Throws with the name of the violated
/// condition when no admissible radius exists.
inline UQRMap build_trap(int a, const LensSpec& spec, const TrapOverrides& ov = {}) {
  if (a % spec.p != 0) throw ContractViolation("build_trap: p must divide a");
  if (int(spec.q.size()) != 2) throw ContractViolation("build_trap: implemented at n = 1");

  // Default base point x0 = pi((1/sqrt2) e^{i pi/a}, (1/sqrt2) e^{i pi/a}).
  SpherePoint z0 = ov.z0.value_or([&] {
    CVec z(2);
    const double r = 1.0 / std::sqrt(2.0);
    z << std::polar(r, kPi / a), std::polar(r, kPi / a);
    return SpherePoint(std::move(z));
  }());
  if (z0.on_branch_locus()) throw ContractViolation("build_trap: x0 on the branch set");

  auto fa = multi_twist(a);
  const SpherePoint fz0 = fa(z0);
  if (lens_project(fz0, spec).same_class(z0))
    throw ContractViolation("build_trap: x0 is fixed by pi o f");

  // Preimage classes x_1..x_N of z0 under f_a (N = a^{n+1}/p), each taken at
  // the lift nearest convenience (canonical representative).
  auto classes = twist_preimages(a, z0, spec);
  const int n_pre = int(classes.size());

  std::vector<SpherePoint> lifts;
  lifts.push_back(z0);
  for (const auto& c : classes) lifts.push_back(c.representative());

  // Scale-setting distances (solver upper bounds; all conditions below carry
  // 10% margins per the radius-selection recipe).
  const double d_uv = UQRMap::fast_distance(z0, fz0);
  const double radius_u = 0.30 * d_uv;
  const double radius_v = 0.30 * d_uv;
  const double pair_sep = detail_trap::min_pairwise_lens_distance(lifts, spec);
  const double orbit_sep = detail_trap::min_orbit_separation(lifts, spec);

  const SpherePoint z_prime =
      SpherePoint::from_polar(z0.radii(), Eigen::VectorXd::Zero(2));
  auto flow_ok = [&](double r) { return detail_flow::twist_flow_survives(z_prime, r, a); };

  auto admissible = [&](double r) {
    if (!flow_ok(r)) return false;                       // (1) R < R0(f, x_i)
    if (!(r < 0.9 * radius_v / a)) return false;         // (2) closure(B_0) inside V_0
    if (!(r < 0.9 * radius_u / a)) return false;         // (3) closure(B_i) inside U_i
    if (!(r < 0.9 * radius_u)) return false;             // (4) closure(B(z0, R)) inside U
    if (!(r < 0.9 * radius_v)) return false;             // (5) closure(B(f x0, R)) inside V
    if (!(2.2 * r < pair_sep)) return false;             // disjoint modification balls
    if (!(2.2 * r < orbit_sep)) return false;            // pi injective on each ball
    return true;
  };

  double r_hat;
  {
    double lo = 0.0, hi = kPi / 2;
    if (!admissible(1e-4)) {
      std::string which = !flow_ok(1e-4) ? "flow domain" : "neighborhood separation";
      throw NumericalError("build_trap: no admissible radius (failing condition: " + which +
                           ")");
    }
    for (int it = 0; it < 20; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (admissible(mid))
        lo = mid;
      else
        hi = mid;
    }
    r_hat = lo;
  }
  const double R = ov.modification_radius.value_or(r_hat);
  if (!admissible(R))
    throw ContractViolation("build_trap: override radius violates the selection conditions");

  // First pass: per-center admissible conformal radii (identical by symmetry
  // of the radii vector, but take the min anyway), then rebuild with the
  // common radius.
  double r_conf = std::numeric_limits<double>::infinity();
  for (const auto& z : lifts) {
    auto t = trap_interpolant(a, z, R);
    r_conf = std::min(r_conf, t.conformal_radius);
  }
  if (ov.conformal_radius) {
    if (!(*ov.conformal_radius <= r_conf))
      throw ContractViolation("build_trap: conformal radius override too large");
    r_conf = *ov.conformal_radius;
  }
  std::vector<TrapInterpolant> interp;
  for (const auto& z : lifts) interp.push_back(trap_interpolant(a, z, R, r_conf));

  // Inversion region strictly inside B(z0, r') = g1(B'_i).
  const double rho = ov.inversion_rho.value_or(0.8 * r_conf);
  if (!(rho < r_conf))
    throw ContractViolation("build_trap: inversion radius must sit inside the conformal image");
  auto inv = make_inversion(z0, rho);
  if (!(inv.achieved_radius_max < 0.98 * r_conf))
    throw NumericalError("build_trap: inversion region escapes the conformal image ball");

  TrapConfig cfg{a,
                 spec,
                 z0,
                 n_pre,
                 R,
                 r_conf,
                 rho,
                 inv.loxodromic_d,
                 radius_u,
                 radius_v};
  return UQRMap(std::move(cfg), std::move(lifts), std::move(interp), std::move(inv));
}

/// Region labels along the orbit of x.  TRAP is absorbing; TRANSIT is always
/// followed by TRAP.  Orbits reaching the branch locus are truncated.
struct OrbitClassification {
  std::vector<Region> labels;
  bool truncated = false;
};

inline OrbitClassification classify_orbit(const UQRMap& u, const LensPoint& x, int n_max) {
  OrbitClassification out;
  LensPoint cur = x;
  for (int n = 0; n < n_max; ++n) {
    if (cur.representative().on_branch_locus()) {
      out.truncated = true;
      break;
    }
    out.labels.push_back(u.region(cur));
    cur = u.eval(cur);
  }
  return out;
}

struct JuliaCloud {
  int depth = 0;
  std::vector<LensPoint> points;          // nodes at the final depth
  std::vector<std::size_t> cylinder_key;  // inverse-branch word of each point
  std::vector<int> seed_id;
  std::vector<double> cluster_diameters;  // one per cylinder (branch word)
  std::vector<double> point_diameters;    // per point: its cylinder's diameter
  int pruned = 0;
};

/// Inverse-iteration approximation of J(g).  Seeds sample the conformal
/// balls (complement-of-trap representatives); each level applies the
/// verified inverse branches and prunes anything that escapes the union of
/// the conformal balls.  Points sharing the same branch word across seeds
/// sample one cylinder of the Cantor structure; the reported diameters are
/// the max pairwise cc distances within each such cylinder sample.
inline JuliaCloud julia_approx(const UQRMap& u, int depth, int max_depth = 8,
                               std::size_t max_nodes = 200000, int seeds_per_ball = 5) {
  if (depth > max_depth)
    throw ContractViolation("julia_approx: depth exceeds the configured maximum");
  JuliaCloud out;
  out.depth = depth;

  struct Node {
    LensPoint pt;
    int seed;
    std::size_t word;
  };
  std::vector<Node> frontier;
  {
    int sid = 0;
    Rng rng(4242);
    for (std::size_t i = 1; i < u.center_lifts().size(); ++i) {
      const SpherePoint& c = u.center_lifts()[i];
      frontier.push_back({LensPoint(c, u.spec()), sid++, 0});
      for (int j = 1; j < seeds_per_ball; ++j) {
        auto w = geodesic_point(c, {rng.uniform(-kPi, kPi), rng.uniform(-1.0, 1.0)},
                                0.5 * u.config().conformal_radius);
        frontier.push_back({LensPoint(w, u.spec()), sid++, 0});
      }
    }
  }

  const std::size_t branching =
      std::size_t(u.spec().p) * std::size_t(u.center_lifts().size());
  for (int d = 0; d < depth; ++d) {
    std::vector<Node> next;
    for (const auto& node : frontier) {
      int pr = 0;
      auto pre = u.preimages_with_labels(node.pt, &pr);
      out.pruned += pr;
      for (auto& [pt, label] : pre)
        next.push_back({std::move(pt), node.seed, node.word * branching + label});
      if (next.size() > max_nodes) throw NumericalError("julia_approx: node budget exceeded");
    }
    frontier = std::move(next);
  }

  std::map<std::size_t, std::vector<std::size_t>> cylinders;
  for (std::size_t i = 0; i < frontier.size(); ++i) {
    out.points.push_back(frontier[i].pt);
    out.cylinder_key.push_back(frontier[i].word);
    out.seed_id.push_back(frontier[i].seed);
    cylinders[frontier[i].word].push_back(i);
  }
  out.point_diameters.assign(out.points.size(), 0.0);
  for (const auto& [word, members] : cylinders) {
    double diam = 0;
    for (std::size_t i = 1; i < members.size(); ++i)
      diam = std::max(diam, lens_distance_fast(out.points[members[0]],
                                               out.points[members[i]]));
    out.cluster_diameters.push_back(diam);
    for (auto m : members) out.point_diameters[m] = diam;
  }
  return out;
}

/// Iterate-distortion table for the lens self-map g.
inline std::vector<IterateRow> iterate_distortion(const UQRMap& u, std::vector<LensPoint> sample,
                                                  int n_max) {
  std::function<std::pair<LensPoint, Eigen::Matrix2d>(const LensPoint&)> step =
      [&u](const LensPoint& x) { return u.step_with_matrix(x); };
  return iterate_distortion_rows<LensPoint>(step, std::move(sample), n_max);
}

}  // namespace srqr
