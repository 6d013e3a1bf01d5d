#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "bdpp/geometry.hpp"

using namespace bdpp;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("gauss-legendre nodes are symmetric and integrate polynomials") {
  const auto [x, w] = gauss_legendre(16);
  REQUIRE(x.size() == 16);
  CHECK(std::abs(w.sum() - 2.0) < 1e-13);
  for (int i = 0; i < 8; ++i) {
    CHECK(x(i) == doctest::Approx(-x(15 - i)).epsilon(1e-15));
    CHECK(w(i) == doctest::Approx(w(15 - i)).epsilon(1e-15));
  }
  // Exact for degree <= 31.
  double acc = 0.0;
  for (int i = 0; i < 16; ++i) acc += w(i) * std::pow(x(i), 30);
  CHECK(acc == doctest::Approx(2.0 / 31.0).epsilon(1e-13));
}

TEST_CASE("domain geometry") {
  const DomainSpec d = DomainSpec::disk(2.0, Complex(0.5, -0.5));
  CHECK(d.n == 1);
  CHECK(d.volume() == doctest::Approx(4.0 * kPi));
  CHECK(d.inradius() == doctest::Approx(2.0));
  CHECK(d.circumradius() == doctest::Approx(2.0 + std::sqrt(0.5)));
  CVec z(1);
  z(0) = Complex(2.4, -0.5);
  CHECK(d.contains(z));
  z(0) = Complex(2.6, -0.5);
  CHECK(!d.contains(z));

  const DomainSpec b = DomainSpec::bidisk(1.0, 0.5);
  CHECK(b.n == 2);
  CHECK(b.volume() == doctest::Approx(kPi * kPi * 0.25));
  CHECK(b.circumradius() == doctest::Approx(std::sqrt(1.25)));

  const DomainSpec x = DomainSpec::box({{-1.0, 1.0}, {0.0, 2.0}});
  CHECK(x.n == 1);
  CHECK(x.volume() == doctest::Approx(4.0));
  CVec c = x.centroid();
  CHECK(c(0).real() == doctest::Approx(0.0));
  CHECK(c(0).imag() == doctest::Approx(1.0));
}

TEST_CASE("quadrature weights sum to the volume") {
  const QuadratureGrid g1 = build_quadrature(DomainSpec::disk(1.0), {32, 64});
  CHECK(g1.weights.minCoeff() > 0.0);
  CHECK(g1.weights.sum() == doctest::Approx(kPi).epsilon(1e-13));

  const QuadratureGrid g2 = build_quadrature(DomainSpec::bidisk(0.7, 1.1), {8, 16});
  CHECK(g2.weights.sum() == doctest::Approx(kPi * kPi * 0.49 * 1.21).epsilon(1e-13));

  const QuadratureGrid g3 =
      build_quadrature(DomainSpec::box({{-0.5, 0.5}, {-0.25, 0.75}}), {8, 8});
  CHECK(g3.weights.sum() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("disk quadrature integrates smooth fields to machine precision") {
  const QuadratureGrid g = build_quadrature(DomainSpec::disk(1.0), {32, 64});
  const double m2 = integrate_real(g, [](const CVec& z) { return std::norm(z(0)); });
  CHECK(m2 == doctest::Approx(kPi / 2.0).epsilon(1e-13));
  const double gauss = integrate_real(g, [](const CVec& z) { return std::exp(-std::norm(z(0))); });
  CHECK(gauss == doctest::Approx(kPi * (1.0 - std::exp(-1.0))).epsilon(1e-13));
  // Angular exactness: e^{i theta} modes integrate to zero.
  const Complex m1 = integrate(g, [](const CVec& z) { return z(0); });
  CHECK(std::abs(m1) < 1e-15);
}

TEST_CASE("box quadrature tensorizes") {
  const QuadratureGrid g = build_quadrature(
      DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}, {-1.0, 1.0}}), {8, 8, 8, 8});
  REQUIRE(g.domain.n == 2);
  const double v = integrate_real(g, [](const CVec& z) {
    return z(0).real() * z(0).real() * z(1).imag() * z(1).imag();
  });
  CHECK(v == doctest::Approx(16.0 / 9.0).epsilon(1e-13));
}

TEST_CASE("quadrature rejects bad resolutions and integrands") {
  CHECK_THROWS(build_quadrature(DomainSpec::disk(1.0), {4, 64}));
  CHECK_THROWS(build_quadrature(DomainSpec::disk(1.0), {32}));
  CHECK_THROWS(build_quadrature(DomainSpec::box({{-1.0, 1.0}, {-1.0, 1.0}}), {8, 8, 8}));
  const QuadratureGrid g = build_quadrature(DomainSpec::disk(1.0), {32, 64});
  CHECK_THROWS(integrate_real(g, [](const CVec&) {
    return std::numeric_limits<double>::quiet_NaN();
  }));
}

TEST_CASE("node accessor matches the node matrix") {
  const QuadratureGrid g = build_quadrature(DomainSpec::bidisk(1.0, 1.0), {8, 8});
  const CVec z = g.node(17);
  CHECK(z(0) == g.nodes(17, 0));
  CHECK(z(1) == g.nodes(17, 1));
}
