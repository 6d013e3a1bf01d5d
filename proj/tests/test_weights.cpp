#include <doctest.h>

#include <cmath>

#include "bdpp/geometry.hpp"
#include "bdpp/weights.hpp"

using namespace bdpp;

TEST_CASE("quadratic weights and their hessians") {
  const WeightFunction w = WeightFunction::quadratic(2.0, 1);
  CVec z(1);
  z(0) = Complex(0.3, -0.4);
  CHECK(w.eval(z) == doctest::Approx(2.0 * 0.25));
  CHECK(w.hessian(z)(0, 0).real() == doctest::Approx(2.0));

  const WeightFunction w2 = WeightFunction::quadratic_diagonal({1.0, 1.5});
  CVec y(2);
  y << Complex(1.0, 0.0), Complex(0.0, 2.0);
  CHECK(w2.eval(y) == doctest::Approx(1.0 + 6.0));
  const CMat H = w2.hessian(y);
  CHECK(H(0, 0).real() == doctest::Approx(1.0));
  CHECK(H(1, 1).real() == doctest::Approx(1.5));
  CHECK(std::abs(H(0, 1)) == doctest::Approx(0.0));
}

TEST_CASE("custom weight differentiates |z|^4") {
  // d/dz d/dconj(z) (z conj z)^2 = 4 |z|^2.
  const WeightFunction w = WeightFunction::custom(
      [](const CVec& z) { return std::norm(z(0)) * std::norm(z(0)); }, 1);
  CVec z(1);
  z(0) = Complex(0.3, 0.2);
  CHECK(w.hessian(z)(0, 0).real() == doctest::Approx(4.0 * 0.13).epsilon(1e-6));
}

TEST_CASE("bump evaluation and support") {
  CVec c(1);
  c(0) = Complex(0.25, 0.0);
  const TestFunction u = TestFunction::bump(c, 0.35, 0.05);
  CHECK(!u.is_zero());
  CHECK(u.eval(c) == doctest::Approx(0.05));  // profile is 1 at the center
  CVec z(1);
  z(0) = Complex(0.25 + 0.36, 0.0);
  CHECK(u.eval(z) == 0.0);
  CHECK(u.hessian(z).cwiseAbs().maxCoeff() == 0.0);
  CHECK(u.support_inside(DomainSpec::disk(1.0)));
  CHECK(!u.support_inside(DomainSpec::disk(0.6)));

  const TestFunction s = u.scaled(-2.0);
  CHECK(s.eval(c) == doctest::Approx(-0.1));
  CHECK(u.scaled(0.0).is_zero());
  CHECK(TestFunction::zero(2).is_zero());
  CHECK(TestFunction::zero(1).eval(z) == 0.0);
}

TEST_CASE("bump hessian matches finite differences") {
  CVec c(1);
  c(0) = Complex(0.1, -0.2);
  const TestFunction u = TestFunction::bump(c, 0.4, 0.3);
  for (const double dx : {0.0, 0.12, -0.2}) {
    for (const double dy : {0.05, -0.15}) {
      CVec z(1);
      z(0) = c(0) + Complex(dx, dy);
      const CMat fd = complex_hessian_fd([&](const CVec& p) { return u.eval(p); }, z, 1e-4);
      CHECK(std::abs(fd(0, 0) - u.hessian(z)(0, 0)) < 1e-5);
    }
  }
}

TEST_CASE("bump hessian matches finite differences in two variables") {
  CVec c(2);
  c << Complex(0.1, 0.0), Complex(-0.05, 0.05);
  const TestFunction u = TestFunction::bump(c, 0.3, 0.012);
  CVec z(2);
  z << c(0) + Complex(0.05, -0.03), c(1) + Complex(0.02, 0.06);
  const CMat fd = complex_hessian_fd([&](const CVec& p) { return u.eval(p); }, z, 1e-4);
  const CMat an = u.hessian(z);
  CHECK((fd - an).cwiseAbs().maxCoeff() < 1e-6);
  // Hermitian with real diagonal.
  CHECK(std::abs(an(0, 1) - std::conj(an(1, 0))) < 1e-14);
  CHECK(an(0, 0).imag() == 0.0);
}

TEST_CASE("hermitian lambda_min closed forms") {
  CMat h1(1, 1);
  h1(0, 0) = 2.5;
  CHECK(hermitian_lambda_min(h1) == doctest::Approx(2.5));
  CMat h2(2, 2);
  h2(0, 0) = 2.0;
  h2(1, 1) = 2.0;
  h2(0, 1) = Complex(0.0, 1.0);
  h2(1, 0) = Complex(0.0, -1.0);
  CHECK(hermitian_lambda_min(h2) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("admissibility endpoints") {
  const QuadratureGrid grid = build_quadrature(DomainSpec::disk(1.0), {32, 64});
  const WeightFunction phi = WeightFunction::quadratic(1.0, 1);
  CVec c = CVec::Zero(1);

  const TestFunction ok = TestFunction::bump(c, 0.5, 0.08);
  const AdmissibilityReport a = check_admissible(phi, ok, grid);
  CHECK(a.admissible);
  CHECK(a.lambda_min_t0 == doctest::Approx(1.0));
  CHECK(a.lambda_min_t1 > 0.0);
  CHECK(a.lambda_min_t1 < 1.0);  // the bump's concave shoulder bites

  const TestFunction steep = TestFunction::bump(c, 0.3, 0.5);
  CHECK(!check_admissible(phi, steep, grid).admissible);

  const TestFunction outside = TestFunction::bump(c, 1.2, 0.01);
  CHECK_THROWS(check_admissible(phi, outside, grid));
}

TEST_CASE("shifted weight adds the bump") {
  const WeightFunction phi = WeightFunction::quadratic(1.0, 1);
  CVec c = CVec::Zero(1);
  const TestFunction u = TestFunction::bump(c, 0.5, 0.08);
  const WeightFunction w = shifted_weight(phi, u, 0.5);
  CVec z(1);
  z(0) = Complex(0.2, 0.1);
  CHECK(w.eval(z) == doctest::Approx(phi.eval(z) + 0.5 * u.eval(z)).epsilon(1e-15));
  const CMat H = w.hessian(z);
  const CMat want = phi.hessian(z) + 0.5 * u.hessian(z);
  CHECK((H - want).cwiseAbs().maxCoeff() < 1e-14);
}
