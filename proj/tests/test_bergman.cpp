#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "bdpp/bergman.hpp"
#include "bdpp/special.hpp"

using namespace bdpp;

namespace {

std::shared_ptr<const QuadratureGrid> disk_grid(int radial = 48, int angular = 96) {
  return std::make_shared<const QuadratureGrid>(
      build_quadrature(DomainSpec::disk(1.0), {radial, angular}));
}

double disk_norm2(int a, double k) {
  return std::numbers::pi * lower_incomplete_gamma(a + 1.0, k) / std::pow(k, a + 1.0);
}

} // namespace

TEST_CASE("multi-index sets") {
  const MultiIndexSet s1 = MultiIndexSet::total_degree(1, 3);
  REQUIRE(s1.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(s1.idx[static_cast<std::size_t>(i)].a[0] == i);

  const MultiIndexSet s2 = MultiIndexSet::total_degree(2, 2);
  REQUIRE(s2.size() == 6);
  int prev = -1;
  for (const auto& m : s2.idx) {
    CHECK(m.degree == m.a[0] + m.a[1]);
    CHECK(m.degree >= prev);
    prev = m.degree;
  }
}

TEST_CASE("degree schedule") {
  CHECK(degree_for_scale(4.0, 1.0) == 22);
  CHECK(degree_for_scale(8.0, 1.0) == 34);
  CHECK(degree_for_scale(16.0, 1.0) == 58);
  CHECK(degree_for_scale(32.0, 1.0) == 106);
  CHECK(degree_for_scale(1.0, 2.0, 2.0) == 18);
}

TEST_CASE("monomial matrix") {
  const MultiIndexSet s = MultiIndexSet::total_degree(2, 2);
  CMat pts(1, 2);
  pts(0, 0) = Complex(2.0, 0.0);
  pts(0, 1) = Complex(0.0, 1.0);
  const CMat M = monomial_matrix(pts, s);
  REQUIRE(M.cols() == 6);
  // Find z1^1 z2^1 and z2^2 among the columns.
  bool saw_cross = false, saw_sq = false;
  for (int j = 0; j < 6; ++j) {
    const auto& m = s.idx[static_cast<std::size_t>(j)];
    if (m.a[0] == 1 && m.a[1] == 1) {
      CHECK(M(0, j) == Complex(0.0, 2.0));
      saw_cross = true;
    }
    if (m.a[0] == 0 && m.a[1] == 2) {
      CHECK(M(0, j) == Complex(-1.0, 0.0));
      saw_sq = true;
    }
  }
  CHECK(saw_cross);
  CHECK(saw_sq);
}

TEST_CASE("gram matrix against the closed-form disk oracle") {
  const auto grid = disk_grid();
  const WeightFunction phi = WeightFunction::quadratic(1.0, 1);
  const CMat G = gram_matrix(*grid, 1.0, phi, 6);
  CHECK(G(0, 0).real() == doctest::Approx(1.9858653037988715).epsilon(1e-12));
  CHECK(G(1, 1).real() == doctest::Approx(0.8301379540079498).epsilon(1e-12));
  for (int a = 0; a <= 6; ++a)
    CHECK(G(a, a).real() == doctest::Approx(disk_norm2(a, 1.0)).epsilon(1e-12));
  // Monomials of distinct degree are orthogonal on the polar rule.
  for (int a = 0; a <= 6; ++a)
    for (int b = 0; b < a; ++b) CHECK(std::abs(G(a, b)) < 1e-14 * G(0, 0).real());
}

TEST_CASE("gram matrix on the bidisk factorizes") {
  const auto grid = std::make_shared<const QuadratureGrid>(
      build_quadrature(DomainSpec::bidisk(1.0, 1.0), {8, 8}));
  const WeightFunction phi = WeightFunction::quadratic(1.0, 2);
  const CMat G = gram_matrix(*grid, 1.0, phi, 3);
  const MultiIndexSet s = MultiIndexSet::total_degree(2, 3);
  CHECK(G(0, 0).real() == doctest::Approx(3.9436610048321843).epsilon(1e-12));
  for (int j = 0; j < s.size(); ++j) {
    const auto& m = s.idx[static_cast<std::size_t>(j)];
    CHECK(G(j, j).real() ==
          doctest::Approx(disk_norm2(m.a[0], 1.0) * disk_norm2(m.a[1], 1.0)).epsilon(1e-10));
  }
}

TEST_CASE("gram resolution floors") {
  const auto coarse = disk_grid(16, 32);
  CHECK_THROWS(require_gram_resolution(*coarse, 20));
  CHECK_NOTHROW(require_gram_resolution(*coarse, 15));
}

TEST_CASE("orthonormalize rejects indefinite input") {
  const auto grid = disk_grid(16, 32);
  const WeightFunction phi = WeightFunction::quadratic(1.0, 1);
  CMat G(2, 2);
  G << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  CHECK_THROWS(orthonormalize(G, MultiIndexSet::total_degree(1, 1), grid, 1.0, phi));
}

TEST_CASE("orthonormalize drops dependent directions") {
  const auto grid = disk_grid(16, 32);
  const WeightFunction phi = WeightFunction::quadratic(1.0, 1);
  CMat V(4, 3);
  for (int p = 0; p < 4; ++p) {
    const Complex z(0.1 + 0.2 * p, -0.15 * p);
    V(p, 0) = 1.0;
    V(p, 1) = z;
    V(p, 2) = z;  // duplicate of column 1
  }
  const CMat G = V.adjoint() * V;
  const TruncatedBasis b = orthonormalize(G, MultiIndexSet::total_degree(1, 2), grid, 1.0, phi);
  CHECK(b.dim() == 2);
}

TEST_CASE("built basis is orthonormal on the grid") {
  const auto grid = disk_grid();
  const WeightFunction phi = WeightFunction::quadratic(1.0, 1);
  const TruncatedBasis b = build_basis(grid, 2.0, phi, 12);
  CHECK(b.dim() == 13);
  CHECK(gram_residual(b) < 1e-12);
}

TEST_CASE("kernel at the origin sees only the constant") {
  const auto grid = disk_grid();
  const WeightFunction phi = WeightFunction::quadratic(1.0, 1);
  const TruncatedBasis b = build_basis(grid, 1.0, phi, 13);
  CVec zero = CVec::Zero(1);
  const double k00 = kernel_eval(b, zero, zero).real();
  CHECK(k00 == doctest::Approx(1.0 / 1.9858653037988715).epsilon(1e-10));
  CHECK(k00 == doctest::Approx(0.5035588255089833).epsilon(1e-10));
}

TEST_CASE("kernel is hermitian") {
  const auto grid = disk_grid();
  const WeightFunction phi = WeightFunction::quadratic(1.0, 1);
  const TruncatedBasis b = build_basis(grid, 2.0, phi, 10);
  CVec z(1), w(1);
  z(0) = Complex(0.4, 0.1);
  w(0) = Complex(-0.3, 0.5);
  const Complex a = kernel_eval(b, z, w);
  const Complex c = kernel_eval(b, w, z);
  CHECK(std::abs(a - std::conj(c)) < 1e-13 * (1.0 + std::abs(a)));
}

TEST_CASE("density integrates to the dimension and approaches the limit") {
  const auto grid = disk_grid();
  const WeightFunction phi = WeightFunction::quadratic(1.0, 1);
  const TruncatedBasis b8 = build_basis(grid, 8.0, phi, 34);
  const RVec dens = bergman_density_grid(b8);
  CHECK((grid->weights.array() * dens.array()).sum() ==
        doctest::Approx(static_cast<double>(b8.dim())).epsilon(1e-10));

  CVec zero = CVec::Zero(1);
  const double scaled = bergman_density(b8, zero) / 8.0;
  CHECK(scaled == doctest::Approx(0.3184167030877766).epsilon(1e-9));
  CHECK(std::abs(scaled - 1.0 / std::numbers::pi) < 4e-4);
  CHECK(density_limit(phi, zero) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-14));
}

TEST_CASE("density grid matches pointwise evaluation") {
  const auto grid = disk_grid(32, 64);
  const WeightFunction phi = WeightFunction::quadratic(1.0, 1);
  const TruncatedBasis b = build_basis(grid, 2.0, phi, 10);
  const RVec dens = bergman_density_grid(b);
  for (const int i : {0, 100, 1000, 2047})
    CHECK(dens(i) == doctest::Approx(bergman_density(b, grid->node(i))).epsilon(1e-13));
}

TEST_CASE("truncation tail indicator") {
  const auto grid = disk_grid();
  const WeightFunction phi = WeightFunction::quadratic(1.0, 1);
  const TruncatedBasis deep = build_basis(grid, 4.0, phi, 22);
  CHECK(truncation_tail_indicator(deep) < 1e-8);
  const TruncatedBasis shallow = build_basis(grid, 4.0, phi, 4);
  CHECK(truncation_tail_indicator(shallow) > 1e-4);
  CVec c = CVec::Zero(1);
  CHECK(truncation_tail_indicator(deep, Region{c, 0.55}) < 1e-8);
}
