#include <catch2/catch_amalgamated.hpp>

#include "srqr/distortion.hpp"

using namespace srqr;

namespace {

SpherePoint make_point(Complex a, Complex b) {
  CVec z(2);
  z << a, b;
  return SpherePoint(std::move(z));
}

// Independent oracle for the multi-twist pushforward norm: the direct
// per-slot expression ||(F_a)_* v||^2 = sum (radial_i)^2 + a^2 (angular_i)^2,
// where radial/angular are the polar components of v in slot i.
double twist_push_norm_oracle(int a, const SpherePoint& p, const CVec& v) {
  double s = 0;
  for (int i = 0; i < p.z().size(); ++i) {
    const double th = p.theta(i);
    const double vx = v[i].real(), vy = v[i].imag();
    const double radial = std::cos(th) * vx + std::sin(th) * vy;
    const double angular = std::sin(th) * vx - std::cos(th) * vy;
    s += radial * radial + double(a) * double(a) * angular * angular;
  }
  return std::sqrt(s);
}

// Dense sweep of the unit horizontal circle.
std::pair<double, double> sweep_extremes(int a, const SpherePoint& p, int n = 4096) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (int k = 0; k < n; ++k) {
    const double nrm = twist_push_norm_oracle(a, p, frame_dir(p, kTwoPi * k / n));
    lo = std::min(lo, nrm);
    hi = std::max(hi, nrm);
  }
  return {lo, hi};
}

}  // namespace

TEST_CASE("eigen distortion: rotations are isometries, twists hit (1, a)") {
  Rng rng(139);
  Eigen::VectorXd th(2);
  th << 0.8, -0.5;
  auto rot = rotation_map(th);
  for (int i = 0; i < 100; ++i) {
    auto p = random_sphere_point(rng);
    auto [lo, hi] = eigen_distortion(rot, p);
    REQUIRE(lo == Catch::Approx(1.0).margin(1e-8));
    REQUIRE(hi == Catch::Approx(1.0).margin(1e-8));
  }

  for (int a : {2, 3}) {
    auto fa = multi_twist(a);
    for (int i = 0; i < 1000; ++i) {
      auto p = random_sphere_point(rng);
      if (p.min_radius() < 0.02) continue;
      auto [lo, hi] = eigen_distortion(fa, p);
      REQUIRE(lo >= 1.0 - 1e-8);
      REQUIRE(hi <= a + 1e-8);
      REQUIRE(lo <= hi);
    }
  }
}

TEST_CASE("eigen distortion of F_2 at a reference point matches the sweep oracle") {
  const double s = 1 / std::sqrt(2.0);
  auto p = make_point(std::polar(s, kPi / 3), {s, 0});
  auto [oracle_lo, oracle_hi] = sweep_extremes(2, p);
  // Frozen values from the oracle: the horizontal plane always contains a
  // purely radial direction (norm 1) and its 90-degree rotation is purely
  // angular (norm a), so the extremes are exactly 1 and 2.
  REQUIRE(oracle_lo == Catch::Approx(1.0).margin(1e-6));
  REQUIRE(oracle_hi == Catch::Approx(2.0).margin(1e-6));

  auto [lo, hi] = eigen_distortion(multi_twist(2), p);
  REQUIRE(lo == Catch::Approx(oracle_lo).margin(1e-7));
  REQUIRE(hi == Catch::Approx(oracle_hi).margin(1e-7));
}

TEST_CASE("metric distortion: identity, rotations, F_2") {
  auto p = make_point(std::polar(0.6, 0.5), std::polar(0.8, -1.1));
  const std::vector<double> radii{0.08, 0.04, 0.02};

  auto id_rep = metric_distortion(identity_map(), p, radii, 32);
  for (const auto& row : id_rep.rows) {
    REQUIRE(row.ratio == Catch::Approx(1.0).margin(1e-6));
    REQUIRE(row.failed_samples == 0);
  }

  Eigen::VectorXd th(2);
  th << 1.9, 0.3;
  auto rot_rep = metric_distortion(rotation_map(th), p, radii, 64);
  for (const auto& row : rot_rep.rows) {
    REQUIRE(row.ratio >= 1.0);
    REQUIRE(row.ratio <= 1.02);
  }
  REQUIRE(rot_rep.extrapolated == Catch::Approx(1.0).margin(0.02));

  auto f2_rep = metric_distortion(multi_twist(2), p, radii, 64);
  REQUIRE(f2_rep.extrapolated <= 2.0 * 1.05);
  REQUIRE(f2_rep.extrapolated >= 1.5);

  REQUIRE_THROWS_AS(metric_distortion(identity_map(), p, {0.04, 0.08}, 16),
                    ContractViolation);
  REQUIRE_THROWS_AS(metric_distortion(identity_map(), p, {1e-5}, 16), ContractViolation);
}

TEST_CASE("bld ratio: isometries, twist bounds, reparametrization invariance") {
  Rng rng(149);
  auto x = make_point(std::polar(0.7, 0.2), std::polar(std::sqrt(1 - 0.49), 0.9));

  auto path = sample_geodesic_path(x, {0.3, 0.7}, 0.5, 600);
  Eigen::VectorXd th(2);
  th << -0.4, 1.2;
  auto [riso, riso_inv] = bld_ratio(rotation_map(th), path);
  REQUIRE(riso == Catch::Approx(1.0).margin(1e-6));

  auto f2 = multi_twist(2);
  int used = 0;
  for (int i = 0; i < 100; ++i) {
    auto start = random_sphere_point(rng);
    if (start.min_radius() < 0.2) continue;
    auto g = sample_geodesic_path(start, {rng.uniform(-kPi, kPi), rng.uniform(-1.0, 1.0)},
                                  0.12, 240);
    // Paths crossing the branch locus would not stay horizontal under mapping.
    bool safe = true;
    for (std::size_t k = 0; k < g.size(); ++k)
      if (g.sample(k).min_radius() < 0.1) safe = false;
    if (!safe) continue;
    ++used;
    auto [ratio, inv] = bld_ratio(f2, g);
    REQUIRE(ratio >= 1.0 - 1e-4);
    REQUIRE(ratio <= 2.0 + 1e-4);
    REQUIRE(inv == Catch::Approx(1.0 / ratio).margin(1e-12));
  }
  REQUIRE(used > 30);

  // Constant-speed reparametrization leaves the ratio unchanged.
  auto slow = sample_geodesic_path(x, {0.3, 0.7}, 0.5, 600);
  std::vector<SpherePoint> pts;
  std::vector<double> ts;
  for (std::size_t k = 0; k < slow.size(); ++k) {
    pts.push_back(slow.sample(k));
    ts.push_back(slow.time(k) * 3.0);
  }
  HorizontalPath stretched(pts, ts);
  auto [r1, i1] = bld_ratio(f2, slow);
  auto [r2, i2] = bld_ratio(f2, stretched);
  REQUIRE(r1 == Catch::Approx(r2).margin(1e-9));
}

TEST_CASE("iterate distortion: rotations flat, F_2 doubles per iterate") {
  Rng rng(151);
  std::vector<SpherePoint> sample;
  for (int i = 0; i < 40; ++i) {
    auto p = random_sphere_point(rng);
    if (p.min_radius() < 0.15) {
      --i;
      continue;
    }
    sample.push_back(p);
  }

  Eigen::VectorXd th(2);
  th << 0.3, 2.2;
  auto rows_rot = iterate_distortion(rotation_map(th), sample, 6);
  for (const auto& row : rows_rot) REQUIRE(row.max_ratio == Catch::Approx(1.0).margin(1e-7));

  // Control case: the chain rule on F_2 = F_{2^n} gives ratio exactly 2^n
  // until an orbit leaves the safe zone.
  auto rows_f2 = iterate_distortion(multi_twist(2), sample, 5);
  for (const auto& row : rows_f2) {
    REQUIRE(row.max_ratio == Catch::Approx(std::pow(2.0, row.n)).epsilon(1e-6));
  }
}

TEST_CASE("metric H is bounded by the eigen ratio for diffeomorphic handles") {
  auto p = make_point(std::polar(0.55, -0.8), std::polar(std::sqrt(1 - 0.3025), 0.4));
  for (int a : {2, 3}) {
    auto rep = metric_distortion(multi_twist(a), p, {0.06, 0.03, 0.015}, 48);
    const double eig_ratio = rep.eigen.second / rep.eigen.first;
    REQUIRE(rep.extrapolated <= eig_ratio * 1.05);
  }
}

TEST_CASE("chain submultiplicativity of the eigen bounds") {
  Rng rng(157);
  auto f2 = multi_twist(2);
  auto f3 = multi_twist(3);
  auto comp = compose({f2, f3});
  for (int i = 0; i < 100; ++i) {
    auto p = random_sphere_point(rng);
    if (p.min_radius() < 0.05 || f2(p).min_radius() < 0.05) continue;
    auto [l1, h1] = eigen_distortion(f2, p);
    auto [l2, h2] = eigen_distortion(f3, f2(p));
    auto [lc, hc] = eigen_distortion(comp, p);
    REQUIRE(hc <= h1 * h2 + 1e-8);
    REQUIRE(lc >= l1 * l2 - 1e-8);
  }
}
