#include <catch2/catch_amalgamated.hpp>

#include "srqr/flow.hpp"

using namespace srqr;

namespace {
SpherePoint make_point(Complex a, Complex b) {
  CVec z(2);
  z << a, b;
  return SpherePoint(std::move(z));
}
}  // namespace

TEST_CASE("libermann field: zero and constant potentials") {
  Rng rng(107);
  auto zero = libermann_field(constant_potential(0.0));
  auto one = libermann_field(constant_potential(1.0));
  for (int i = 0; i < 100; ++i) {
    auto p = random_sphere_point(rng);
    REQUIRE(zero.eval(p).norm() < 1e-14);
    // rho == 1: W = T (Reeb flow).
    REQUIRE((one.eval(p) - CVec(Complex(0, 1) * p.z())).norm() < 1e-13);
  }
}

TEST_CASE("alpha(W) = rho pointwise, closed-form and FD gradients") {
  Rng rng(109);
  auto tw = twist_potential(2);
  auto field = libermann_field(tw);

  // A generic potential exercising the finite-difference gradient oracle.
  struct Generic final : PotentialImpl {
    double eval(const SpherePoint& p) const override {
      return p.z()[0].real() * p.z()[1].imag() + 0.3 * p.r(0) * p.r(0);
    }
    bool in_domain(const SpherePoint&) const override { return true; }
  };
  auto gen_field = libermann_field(Potential(std::make_shared<Generic>()));

  for (int i = 0; i < 200; ++i) {
    auto p = random_sphere_point(rng);
    if (tw.in_domain(p)) {
      const double a = cdot(p.z(), field.eval(p)).imag();
      REQUIRE(a == Catch::Approx(tw(p)).margin(1e-6));
    }
    const double ag = cdot(p.z(), gen_field.eval(p)).imag();
    REQUIRE(ag == Catch::Approx(Generic{}.eval(p)).margin(1e-6));
  }

  // FD gradient agrees with the closed form on the twist potential.
  struct TwistFd final : PotentialImpl {
    potentials::Twist inner{2};
    double eval(const SpherePoint& p) const override { return inner.eval(p); }
    bool in_domain(const SpherePoint& p) const override { return inner.in_domain(p); }
  };
  // The two gradients extend rho off the sphere differently, so only their
  // tangential parts are comparable.
  auto tangential = [](const SpherePoint& p, CVec g) {
    g -= cdot(p.z(), g).real() * p.z();
    return g;
  };
  Potential fd(std::make_shared<TwistFd>());
  for (int i = 0; i < 50; ++i) {
    auto p = random_sphere_point(rng);
    if (!fd.in_domain(p) || p.min_radius() < 0.1 ||
        std::abs(p.theta(0)) > 2.5 || std::abs(p.theta(1)) > 2.5)
      continue;
    REQUIRE((tangential(p, fd.gradient(p)) - tangential(p, tw.gradient(p))).norm() < 1e-7);
  }
}

TEST_CASE("twist potential: fixed points, domain, flow reproduces F_a") {
  auto tw = twist_potential(3);
  // theta = 0 points are flow fixed points with rho = 0.
  auto z0 = make_point({0.6, 0}, {0.8, 0});
  REQUIRE(tw(z0) == Catch::Approx(0.0).margin(1e-14));
  auto field = libermann_field(tw);
  REQUIRE(field.eval(z0).norm() < 1e-12);

  REQUIRE_THROWS_AS(tw(make_point({-0.6, 0}, {0.8, 0})), DomainError);  // theta = pi
  REQUIRE_THROWS_AS(tw(make_point({1, 0}, {0, 0})), DomainError);       // branch locus

  // Time-0 flow is the identity; time-1 flow is F_a (within 1e-4).
  Rng rng(113);
  auto f3 = multi_twist(3);
  int checked = 0;
  for (int i = 0; i < 80; ++i) {
    if (checked >= 4) break;
    auto p = random_sphere_point(rng);
    if (!tw.in_domain(p) || p.min_radius() < 0.15 || std::abs(p.theta(0)) > 0.9 ||
        std::abs(p.theta(1)) > 0.9)
      continue;
    ++checked;
    auto r0 = flow(field, p, 0.0);
    REQUIRE((r0.endpoint.z() - p.z()).norm() == 0.0);
    auto r1 = flow(field, p, 1.0);
    REQUIRE_FALSE(r1.domain_exit);
    REQUIRE((r1.endpoint.z() - f3(p).z()).norm() < 1e-4);
  }
  REQUIRE(checked >= 3);
}

TEST_CASE("Reeb flow has period 2 pi and the flow satisfies the semigroup law") {
  Rng rng(127);
  auto reeb_field = libermann_field(constant_potential(1.0));
  for (int i = 0; i < 5; ++i) {
    auto p = random_sphere_point(rng);
    auto full = flow(reeb_field, p, kTwoPi);
    REQUIRE((full.endpoint.z() - p.z()).norm() < 1e-5);

    auto ab = flow(reeb_field, flow(reeb_field, p, 0.7).endpoint, 0.9);
    auto once = flow(reeb_field, p, 1.6);
    REQUIRE((ab.endpoint.z() - once.endpoint.z()).norm() < 1e-5);
  }

  // Flow maps preserve the contact structure.
  auto fm = flow_map(reeb_field, 0.8);
  for (int i = 0; i < 10; ++i) {
    auto p = random_sphere_point(rng);
    REQUIRE(pullback_contact_factor(fm, p) == Catch::Approx(1.0).margin(1e-5));
  }
}

TEST_CASE("flow flags domain exit instead of failing silently") {
  auto tw = twist_potential(2);
  auto field = libermann_field(tw);
  // Angles grow like 2^s; pick a start whose angle reaches pi before s = 3.
  auto p = make_point(std::polar(1 / std::sqrt(2.0), 1.0), std::polar(1 / std::sqrt(2.0), 0.2));
  auto r = flow(field, p, 3.0);
  REQUIRE(r.domain_exit);
  REQUIRE(r.time_reached < 3.0);
  REQUIRE(r.time_reached > 0.5);
}

TEST_CASE("bump: levels, range, and gap rejection") {
  auto center = make_point({1 / std::sqrt(2.0), 0}, {1 / std::sqrt(2.0), 0});
  std::vector<SpherePoint> outer;
  Rng rng(131);
  for (int i = 0; i < 64; ++i)
    outer.push_back(geodesic_point(center, {rng.uniform(-kPi, kPi), rng.uniform(-1.0, 1.0)},
                                   rng.uniform(0.25, 0.35)));
  HeisenbergChart chart(center);
  double inner_gauge = 0;
  for (const auto& q : detail_flow::sample_cc_sphere(center, 0.02, 12, 7))
    inner_gauge = std::max(inner_gauge, chart.gauge_from_base(q));

  auto phi = bump(outer, center, inner_gauge);
  for (const auto& q : outer) REQUIRE(phi(q) == 1.0);
  REQUIRE(phi(center) == 0.0);
  for (int i = 0; i < 2000; ++i) {
    auto p = random_sphere_point(rng);
    const double v = phi(p);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
  }

  // Oversized delta: gap below 4 delta is rejected.
  REQUIRE_THROWS_AS(bump(outer, center, inner_gauge, 10.0), ContractViolation);
}

TEST_CASE("trap interpolant: seams, isometry on the conformal ball, radius guard") {
  const int a = 2;
  const double s = 1 / std::sqrt(2.0);
  auto z_star = make_point(std::polar(s, kPi / a), std::polar(s, kPi / a));
  const double R = 0.22;
  auto trap = trap_interpolant(a, z_star, R);
  auto fa = multi_twist(a);

  // G1(z_star) = F_a(z_star).
  REQUIRE((trap.g1(z_star).z() - fa(z_star).z()).norm() < 1e-9);

  // Outside B: G1 = F_a exactly.
  Rng rng(137);
  int outside = 0;
  for (int i = 0; i < 300; ++i) {
    auto p = random_sphere_point(rng);
    if (sphere_distance_fast(z_star, p) <= R * 1.05) continue;
    ++outside;
    REQUIRE((trap.g1(p).z() - fa(p).z()).norm() < 1e-10);
  }
  REQUIRE(outside > 100);

  // Isometry (exact rotation) on B'.
  for (int i = 0; i < 25; ++i) {
    auto p = geodesic_point(z_star, {rng.uniform(-kPi, kPi), rng.uniform(-1.0, 1.0)},
                            rng.uniform(0.0, trap.conformal_radius * 0.9));
    auto [lo, hi] = eigen_distortion(trap.g1, p);
    REQUIRE(lo == Catch::Approx(1.0).margin(1e-6));
    REQUIRE(hi == Catch::Approx(1.0).margin(1e-6));
  }

  // Continuity across both seams: radial probes straddling the boundary.
  for (int i = 0; i < 16; ++i) {
    const double phi = kTwoPi * i / 16;
    for (double rad : {trap.conformal_radius, R}) {
      auto just_in = geodesic_point(z_star, {phi, 0.3}, rad - 1e-6);
      auto just_out = geodesic_point(z_star, {phi, 0.3}, rad + 1e-6);
      REQUIRE((trap.g1(just_in).z() - trap.g1(just_out).z()).norm() < 1e-5);
    }
  }

  // Annulus distortion finite and recorded.
  REQUIRE(trap.annulus_sup_push > 0);
  REQUIRE(std::isfinite(trap.annulus_sup_push));
  REQUIRE(trap.annulus_inf_push > 0);

  // R beyond the certified bound is rejected with the largest admissible R.
  REQUIRE_THROWS_AS(trap_interpolant(a, z_star, trap.largest_admissible_radius * 1.2),
                    TrapRadiusError);
}
