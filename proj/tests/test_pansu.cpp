#include <catch2/catch_amalgamated.hpp>

#include "srqr/distortion.hpp"
#include "srqr/pansu.hpp"

using namespace srqr;

TEST_CASE("privileged chart sends horizontal frame vectors to the first layer") {
  Rng rng(193);
  for (int i = 0; i < 50; ++i) {
    auto p = random_sphere_point(rng);
    auto chart = privileged_chart(p);
    REQUIRE(chart.forward(p).norm() < 1e-12);
    // Frame directions map to first-layer directions: the t-component of the
    // pushed curve derivative vanishes and the xy-part is the unit vector.
    for (double phi : {0.0, kPi / 2, 1.1}) {
      const double h = 1e-6;
      const CVec dir = frame_dir(p, phi);
      const Eigen::Vector3d plus = chart.forward(SpherePoint(CVec(p.z() + h * dir)));
      const Eigen::Vector3d minus = chart.forward(SpherePoint(CVec(p.z() - h * dir)));
      const Eigen::Vector3d vel = (plus - minus) / (2 * h);
      REQUIRE(vel[0] == Catch::Approx(std::cos(phi)).margin(1e-8));
      REQUIRE(vel[1] == Catch::Approx(std::sin(phi)).margin(1e-8));
      REQUIRE(std::abs(vel[2]) < 1e-6);
    }
  }
}

TEST_CASE("pansu derivative of chart dilations and translations") {
  Rng rng(197);
  for (int i = 0; i < 5; ++i) {
    auto p = random_sphere_point(rng);
    auto chart = privileged_chart(p);

    for (double r : {0.5, 1.7}) {
      auto hom = pansu_derivative(chart_dilation_map(chart, r), p);
      REQUIRE(hom.converged);
      REQUIRE(hom.fit_residual < 1e-6);
      REQUIRE((hom.horizontal - r * Eigen::Matrix2d::Identity()).norm() < 1e-6);
      REQUIRE(hom.vertical == Catch::Approx(r * r).margin(1e-6));
    }

    // Left translation in the chart-induced group law with the
    // group-adapted target chart: delta_{1/h}(g^{-1} g delta_h v) = v
    // identically, so A = Id, tau = 1 to roundoff.  (A wrong bracket
    // normalization in chart_group_mul would make the fit diverge, so this
    // also pins the documented constant.)
    const Eigen::Vector3d g{0.05, -0.03, 0.02};
    auto m = chart_translation_map(chart, g);
    auto target = [chart, g](const SpherePoint& w) {
      return chart_group_mul(Eigen::Vector3d(-g), chart.forward(w));
    };
    auto hom = pansu_derivative_with_charts(m, p, chart, target);
    REQUIRE(hom.converged);
    REQUIRE(hom.fit_residual < 1e-6);
    REQUIRE((hom.horizontal - Eigen::Matrix2d::Identity()).norm() < 1e-6);
    REQUIRE(hom.vertical == Catch::Approx(1.0).margin(1e-6));

    // Through the canonical chart at m(p) the fit differs from the identity
    // only by the chart transition, which is O(|g|).
    auto hom_canon = pansu_derivative(m, p);
    REQUIRE(hom_canon.converged);
    REQUIRE((hom_canon.horizontal - Eigen::Matrix2d::Identity()).norm() < 10.0 * g.norm());
  }
}

TEST_CASE("pansu derivative of F_2 matches the chain-rule oracle") {
  Rng rng(199);
  auto f2 = multi_twist(2);
  int checked = 0;
  for (int i = 0; i < 60 && checked < 15; ++i) {
    auto p = random_sphere_point(rng);
    if (p.min_radius() < 0.25) continue;
    ++checked;
    auto hom = pansu_derivative(f2, p);
    REQUIRE(hom.converged);

    // Independent route: the classical horizontal differential in the same
    // orthonormal frames (the chart is adapted, so entries are comparable).
    const Eigen::Matrix2d oracle = horizontal_matrix(f2, p);
    REQUIRE((hom.horizontal - oracle).norm() < 2e-2);

    // Graded consistency tau = det A, and tau equals the contact factor a.
    REQUIRE(hom.vertical == Catch::Approx(hom.horizontal.determinant()).margin(1e-3));
    REQUIRE(hom.vertical == Catch::Approx(2.0).margin(1e-2));

    REQUIRE(hom_distortion(hom) <= 2.0 + 0.02);
  }
  REQUIRE(checked >= 10);
}

TEST_CASE("chain rule: composite fits equal products of fits") {
  Rng rng(211);
  auto f2 = multi_twist(2);
  Eigen::VectorXd th(2);
  th << 0.4, -0.9;
  auto rot = rotation_map(th);
  auto comp = compose({f2, rot});
  int checked = 0;
  for (int i = 0; i < 40 && checked < 8; ++i) {
    auto p = random_sphere_point(rng);
    if (p.min_radius() < 0.25) continue;
    ++checked;
    auto h_comp = pansu_derivative(comp, p);
    auto h_f2 = pansu_derivative(f2, p);
    auto h_rot = pansu_derivative(rot, f2(p));
    REQUIRE(h_comp.converged);
    const Eigen::Matrix2d prod = h_rot.horizontal * h_f2.horizontal;
    REQUIRE((h_comp.horizontal - prod).norm() <
            5.0 * (h_comp.fit_residual + h_f2.fit_residual + h_rot.fit_residual) + 2e-2);
    REQUIRE(h_comp.vertical ==
            Catch::Approx(h_rot.vertical * h_f2.vertical).margin(2e-2));
  }
  REQUIRE(checked >= 5);
}

TEST_CASE("homomorphism residual: probe images satisfy the product law") {
  Rng rng(223);
  auto f3 = multi_twist(3);
  int checked = 0;
  for (int i = 0; i < 40 && checked < 8; ++i) {
    auto p = random_sphere_point(rng);
    if (p.min_radius() < 0.25) continue;
    ++checked;
    auto hom = pansu_derivative(f3, p);
    REQUIRE(hom.converged);
    auto apply = [&](const Eigen::Vector3d& u) {
      return Eigen::Vector3d{hom.horizontal(0, 0) * u[0] + hom.horizontal(0, 1) * u[1],
                             hom.horizontal(1, 0) * u[0] + hom.horizontal(1, 1) * u[1],
                             hom.vertical * u[2]};
    };
    for (int k = 0; k < 10; ++k) {
      const Eigen::Vector3d u{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const Eigen::Vector3d v{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      const Eigen::Vector3d lhs = apply(chart_group_mul(u, v));
      const Eigen::Vector3d rhs = chart_group_mul(apply(u), apply(v));
      // Holds exactly when tau = det A; the fit satisfies it within 1e-3.
      REQUIRE((lhs - rhs).norm() < 1e-2);
    }
  }
  REQUIRE(checked >= 5);
}

TEST_CASE("hom distortion on explicit matrices") {
  GradedHom h;
  h.converged = true;
  h.horizontal = Eigen::Matrix2d::Identity();
  REQUIRE(hom_distortion(h) == Catch::Approx(1.0));
  h.horizontal << 2, 0, 0, 1;
  REQUIRE(hom_distortion(h) == Catch::Approx(2.0));
  h.converged = false;
  REQUIRE_THROWS_AS(hom_distortion(h), ContractViolation);
}

TEST_CASE("non-convergence is reported on the branch locus") {
  CVec z(2);
  z << Complex(1, 0), Complex(0, 0);
  SpherePoint branch(std::move(z));
  REQUIRE_THROWS_AS(pansu_derivative(multi_twist(2), branch), DomainError);
}
